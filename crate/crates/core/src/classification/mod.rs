//! Four-class recognition from depth-normalized area, point count and the
//! plane-aligned PCA of each object's points.

mod descriptor;
mod pca;

pub use descriptor::{build_descriptor, normalize_area, ObjectDescriptor};
pub use pca::{canonicalize_sign, compute_pca, Pca};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Glass,
    Dish,
    Bowl,
    Cutlery,
    Unknown,
}

impl ObjectClass {
    /// The four recognizable classes, in confusion-matrix order.
    pub const KNOWN: [ObjectClass; 4] = [
        ObjectClass::Glass,
        ObjectClass::Dish,
        ObjectClass::Bowl,
        ObjectClass::Cutlery,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::Glass => "glass",
            ObjectClass::Dish => "dish",
            ObjectClass::Bowl => "bowl",
            ObjectClass::Cutlery => "cutlery",
            ObjectClass::Unknown => "unknown",
        }
    }

    /// Column index in a confusion matrix (`unknown` last).
    pub fn index(self) -> usize {
        match self {
            ObjectClass::Glass => 0,
            ObjectClass::Dish => 1,
            ObjectClass::Bowl => 2,
            ObjectClass::Cutlery => 3,
            ObjectClass::Unknown => 4,
        }
    }

    pub fn is_small(self) -> bool {
        matches!(self, ObjectClass::Glass | ObjectClass::Cutlery)
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glass" => Ok(ObjectClass::Glass),
            "dish" | "plate" => Ok(ObjectClass::Dish),
            "bowl" => Ok(ObjectClass::Bowl),
            "cutlery" => Ok(ObjectClass::Cutlery),
            "unknown" => Ok(ObjectClass::Unknown),
            other => Err(Error::invalid(format!("unknown object class {other:?}"))),
        }
    }
}

/// One value per recognizable class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub glass: T,
    pub dish: T,
    pub bowl: T,
    pub cutlery: T,
}

impl<T> PerClass<T> {
    pub fn from_fn(mut f: impl FnMut(ObjectClass) -> T) -> Self {
        Self {
            glass: f(ObjectClass::Glass),
            dish: f(ObjectClass::Dish),
            bowl: f(ObjectClass::Bowl),
            cutlery: f(ObjectClass::Cutlery),
        }
    }

    /// `None` for [`ObjectClass::Unknown`].
    pub fn get(&self, class: ObjectClass) -> Option<&T> {
        match class {
            ObjectClass::Glass => Some(&self.glass),
            ObjectClass::Dish => Some(&self.dish),
            ObjectClass::Bowl => Some(&self.bowl),
            ObjectClass::Cutlery => Some(&self.cutlery),
            ObjectClass::Unknown => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectClass, &T)> {
        ObjectClass::KNOWN
            .into_iter()
            .filter_map(move |c| self.get(c).map(|v| (c, v)))
    }
}

/// Trained gates of the decision tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    /// Valid depth-normalized area range per class.
    pub area: PerClass<[f64; 2]>,
    /// Observed depth-normalized point-count range per class (reported, not gated).
    pub point_count: PerClass<[f64; 2]>,
    /// Normalized point count separating {cutlery, glass} (below) from {dish, bowl}.
    pub subcat_point_threshold: f64,
    pub cutlery_height_max: f64,
    pub cutlery_axis_ratio_max: f64,
    pub bowl_height_min: f64,
    pub reference_depth: f64,
}

impl ClassModel {
    pub fn validate(&self) -> Result<()> {
        let ranges_ok = self
            .area
            .iter()
            .chain(self.point_count.iter())
            .all(|(_, r)| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite());
        let thresholds_ok = [
            self.subcat_point_threshold,
            self.cutlery_height_max,
            self.cutlery_axis_ratio_max,
            self.bowl_height_min,
            self.reference_depth,
        ]
        .iter()
        .all(|t| *t > 0.0 && t.is_finite());
        if ranges_ok && thresholds_ok {
            Ok(())
        } else {
            Err(Error::invalid("class model has an empty range or non-positive threshold"))
        }
    }
}

/// Decision tree: area gate, point-count sub-category, then geometric rules.
///
/// Total over all descriptors; objects outside every area range are `Unknown`.
pub fn classify(desc: &ObjectDescriptor, model: &ClassModel) -> ObjectClass {
    let area = desc.area_norm;
    let gated: Vec<ObjectClass> = model
        .area
        .iter()
        .filter(|(_, r)| r[0] <= area && area <= r[1])
        .map(|(c, _)| c)
        .collect();
    if gated.is_empty() || !area.is_finite() {
        return ObjectClass::Unknown;
    }

    let small = desc.point_count_norm < model.subcat_point_threshold;
    let remaining: Vec<ObjectClass> = gated.into_iter().filter(|c| c.is_small() == small).collect();
    if let [only] = remaining.as_slice() {
        return *only;
    }

    if small {
        if desc.height < model.cutlery_height_max
            && desc.xy_axis_ratio() < model.cutlery_axis_ratio_max
        {
            ObjectClass::Cutlery
        } else {
            ObjectClass::Glass
        }
    } else if desc.height >= model.bowl_height_min {
        ObjectClass::Bowl
    } else {
        ObjectClass::Dish
    }
}

#[derive(Debug, Clone)]
pub struct TrainedClassModel {
    pub model: ClassModel,
    /// Thresholds whose two populations overlap (the midpoint is still used).
    pub warnings: Vec<String>,
}

fn min_max(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| {
        [lo.min(v), hi.max(v)]
    })
}

/// Learns the gates from descriptors labelled with their true class.
pub fn train_class_model(
    labeled: &[(ObjectDescriptor, ObjectClass)],
    reference_depth: f64,
    margin: f64,
) -> Result<TrainedClassModel> {
    if !(reference_depth > 0.0) {
        return Err(Error::invalid("reference depth must be positive"));
    }
    let missing: Vec<ObjectClass> = ObjectClass::KNOWN
        .into_iter()
        .filter(|c| !labeled.iter().any(|(_, t)| t == c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteTraining(missing));
    }
    let of = |class: ObjectClass| labeled.iter().filter(move |(_, t)| *t == class).map(|(d, _)| d);
    let widen = |[lo, hi]: [f64; 2]| [lo * (1.0 - margin), hi * (1.0 + margin)];

    let area = PerClass::from_fn(|c| widen(min_max(of(c).map(|d| d.area_norm))));
    let point_count = PerClass::from_fn(|c| widen(min_max(of(c).map(|d| d.point_count_norm))));

    let mut warnings = Vec::new();
    let mut split = |name: &str, below: [f64; 2], above: [f64; 2]| {
        // below[1] is the max of the lower population, above[0] the min of the upper one
        if below[1] >= above[0] {
            warnings.push(format!(
                "{name}: populations overlap (lower max {:.4} >= upper min {:.4})",
                below[1], above[0]
            ));
        }
        0.5 * (below[1] + above[0])
    };

    let small_counts = min_max(
        of(ObjectClass::Cutlery)
            .chain(of(ObjectClass::Glass))
            .map(|d| d.point_count_norm),
    );
    let large_counts = min_max(
        of(ObjectClass::Dish)
            .chain(of(ObjectClass::Bowl))
            .map(|d| d.point_count_norm),
    );
    let subcat_point_threshold = split("point count", small_counts, large_counts);
    let cutlery_height_max = split(
        "cutlery/glass height",
        min_max(of(ObjectClass::Cutlery).map(|d| d.height)),
        min_max(of(ObjectClass::Glass).map(|d| d.height)),
    );
    let cutlery_axis_ratio_max = split(
        "cutlery/glass axis ratio",
        min_max(of(ObjectClass::Cutlery).map(|d| d.xy_axis_ratio())),
        min_max(of(ObjectClass::Glass).map(|d| d.xy_axis_ratio())),
    );
    let bowl_height_min = split(
        "dish/bowl height",
        min_max(of(ObjectClass::Dish).map(|d| d.height)),
        min_max(of(ObjectClass::Bowl).map(|d| d.height)),
    );

    let model = ClassModel {
        area,
        point_count,
        subcat_point_threshold,
        cutlery_height_max,
        cutlery_axis_ratio_max,
        bowl_height_min,
        reference_depth,
    };
    model.validate()?;
    Ok(TrainedClassModel { model, warnings })
}
