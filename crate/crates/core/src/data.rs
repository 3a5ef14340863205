//! Study containers, standardization and pooled moment computation.
//!
//! Columns are standardized to squared norm `n` (not unit variance) so the
//! usual `sqrt(2 log p / n)` penalty rules apply directly to standardized data.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Means and scales within this distance of 0 and 1 are snapped, so that
/// already-standardized data passes through unchanged.
const SNAP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Primary,
    Auxiliary,
}

/// One regression sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub id: String,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub kind: StudyKind,
}

impl Study {
    pub fn new(
        id: impl Into<String>,
        x: Array2<f64>,
        y: Array1<f64>,
        kind: StudyKind,
    ) -> Result<Self> {
        let study = Study {
            id: id.into(),
            x,
            y,
            kind,
        };
        study.validate()?;
        Ok(study)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() == 0 || self.p() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "study `{}` is empty ({} x {})",
                self.id,
                self.n(),
                self.p()
            )));
        }
        if self.y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "study `{}` has {} rows but {} responses",
                self.id,
                self.n(),
                self.y.len()
            )));
        }
        for ((row, column), v) in self.x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    study: self.id.clone(),
                    row,
                    column,
                });
            }
        }
        if let Some(row) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                study: self.id.clone(),
                row,
                column: self.p(),
            });
        }
        Ok(())
    }

    /// Cross-moment `Xᵀy / n`.
    pub fn cross_moment(&self) -> Array1<f64> {
        self.x.t().dot(&self.y) / self.n() as f64
    }

    /// New study holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Study {
        Study {
            id: self.id.clone(),
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            kind: self.kind,
        }
    }
}

/// Primary study plus `K` auxiliary studies. Auxiliary `k` (1-based in the
/// literature) lives at position `k - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskData {
    pub primary: Study,
    pub auxiliaries: Vec<Study>,
}

impl TaskData {
    pub fn new(primary: Study, auxiliaries: Vec<Study>) -> Result<Self> {
        let task = TaskData {
            primary,
            auxiliaries,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn p(&self) -> usize {
        self.primary.p()
    }

    pub fn k(&self) -> usize {
        self.auxiliaries.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.primary.validate()?;
        let p = self.p();
        for aux in &self.auxiliaries {
            aux.validate()?;
            if aux.p() != p {
                return Err(Error::DimensionMismatch(format!(
                    "study `{}` has {} covariates, primary `{}` has {}",
                    aux.id,
                    aux.p(),
                    self.primary.id,
                    p
                )));
            }
        }
        Ok(())
    }

    /// Sorted, deduplicated auxiliary positions; errors on out-of-range entries.
    pub fn canonical_set(&self, set: &[usize]) -> Result<Vec<usize>> {
        let mut out = set.to_vec();
        out.sort_unstable();
        out.dedup();
        if let Some(&bad) = out.iter().find(|&&k| k >= self.k()) {
            return Err(Error::UnknownAuxiliary {
                index: bad,
                count: self.k(),
            });
        }
        Ok(out)
    }

    /// Primary followed by the selected auxiliaries, in ascending index order.
    pub fn pooled_studies(&self, set: &[usize]) -> Result<Vec<&Study>> {
        let set = self.canonical_set(set)?;
        let mut studies = Vec::with_capacity(set.len() + 1);
        studies.push(&self.primary);
        studies.extend(set.iter().map(|&k| &self.auxiliaries[k]));
        Ok(studies)
    }

    /// Same auxiliaries, different primary.
    pub fn with_primary(&self, primary: Study) -> TaskData {
        TaskData {
            primary,
            auxiliaries: self.auxiliaries.clone(),
        }
    }
}

/// Affine transform applied to one study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyTransform {
    pub x_center: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_center: f64,
}

impl StudyTransform {
    fn identity(p: usize) -> Self {
        StudyTransform {
            x_center: vec![0.0; p],
            x_scale: vec![1.0; p],
            y_center: 0.0,
        }
    }

    /// Maps a coefficient vector fitted on transformed data back to raw units,
    /// returning `(intercept, raw_coef)`.
    pub fn to_raw(&self, coef: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let raw: Array1<f64> = coef
            .iter()
            .zip(&self.x_scale)
            .map(|(b, s)| b / s)
            .collect();
        let shift: f64 = raw.iter().zip(&self.x_center).map(|(b, m)| b * m).sum();
        (self.y_center - shift, raw)
    }

    /// Applies the stored transform to raw covariates.
    pub fn apply_x(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.x_center[j], self.x_scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

/// Per-study transforms, primary first then auxiliaries in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub center: bool,
    pub scale: bool,
    pub studies: Vec<StudyTransform>,
}

impl StandardizationRecord {
    pub fn primary(&self) -> &StudyTransform {
        &self.studies[0]
    }
}

fn standardize_study(study: &Study, center: bool, scale: bool) -> Result<(Study, StudyTransform)> {
    let n = study.n() as f64;
    let mut tr = StudyTransform::identity(study.p());
    let mut x = study.x.clone();
    for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        let mut mean = if center { col.sum() / n } else { 0.0 };
        if mean.abs() <= SNAP_TOL {
            mean = 0.0;
        }
        if scale {
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let mut sd = (ss / n).sqrt();
            if !(sd > SNAP_TOL) {
                return Err(Error::ConstantColumn {
                    study: study.id.clone(),
                    column: j,
                });
            }
            if (sd - 1.0).abs() <= SNAP_TOL {
                sd = 1.0;
            }
            tr.x_scale[j] = sd;
        }
        tr.x_center[j] = mean;
        let sd = tr.x_scale[j];
        if mean != 0.0 || sd != 1.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        }
    }
    let mut y = study.y.clone();
    if center {
        let mut ybar = y.sum() / n;
        if ybar.abs() <= SNAP_TOL {
            ybar = 0.0;
        }
        tr.y_center = ybar;
        if ybar != 0.0 {
            y.mapv_inplace(|v| v - ybar);
        }
    }
    Ok((
        Study {
            id: study.id.clone(),
            x,
            y,
            kind: study.kind,
        },
        tr,
    ))
}

/// Standardizes every study separately: columns centered (if `center`) and
/// scaled to squared norm `n_k` (if `scale`), responses centered (if `center`).
pub fn standardize(task: &TaskData, center: bool, scale: bool) -> Result<(TaskData, StandardizationRecord)> {
    let (primary, t0) = standardize_study(&task.primary, center, scale)?;
    let mut transforms = vec![t0];
    let mut auxiliaries = Vec::with_capacity(task.k());
    for aux in &task.auxiliaries {
        let (s, t) = standardize_study(aux, center, scale)?;
        auxiliaries.push(s);
        transforms.push(t);
    }
    Ok((
        TaskData {
            primary,
            auxiliaries,
        },
        StandardizationRecord {
            center,
            scale,
            studies: transforms,
        },
    ))
}

fn check_shared_p(studies: &[&Study]) -> Result<usize> {
    let first = studies
        .first()
        .ok_or_else(|| Error::InvalidArgument("no studies supplied".into()))?;
    let p = first.p();
    if let Some(bad) = studies.iter().find(|s| s.p() != p) {
        return Err(Error::DimensionMismatch(format!(
            "study `{}` has {} covariates, expected {}",
            bad.id,
            bad.p(),
            p
        )));
    }
    Ok(p)
}

/// Pooled Gram matrix and cross-moment over all rows of all studies, each
/// divided by the total row count.
pub fn stacked_gram(studies: &[&Study]) -> Result<(Array2<f64>, Array1<f64>)> {
    let p = check_shared_p(studies)?;
    let mut gram = Array2::<f64>::zeros((p, p));
    let mut cross = Array1::<f64>::zeros(p);
    let mut total = 0usize;
    for s in studies {
        gram += &s.x.t().dot(&s.x);
        cross += &s.x.t().dot(&s.y);
        total += s.n();
    }
    let total = total as f64;
    gram /= total;
    cross /= total;
    // enforce exact symmetry
    for i in 0..p {
        for j in 0..i {
            let v = 0.5 * (gram[[i, j]] + gram[[j, i]]);
            gram[[i, j]] = v;
            gram[[j, i]] = v;
        }
    }
    Ok((gram, cross))
}

/// Row-concatenates studies. `offsets[i]`, when given, is subtracted from the
/// response of study `i`.
pub fn stack_rows(studies: &[&Study], offsets: Option<&[Array1<f64>]>) -> Result<(Array2<f64>, Array1<f64>)> {
    let p = check_shared_p(studies)?;
    let total: usize = studies.iter().map(|s| s.n()).sum();
    let mut x = Array2::<f64>::zeros((total, p));
    let mut y = Array1::<f64>::zeros(total);
    let mut row = 0;
    for (i, s) in studies.iter().enumerate() {
        let n = s.n();
        x.slice_mut(s![row..row + n, ..]).assign(&s.x);
        let mut ys = y.slice_mut(s![row..row + n]);
        ys.assign(&s.y);
        if let Some(off) = offsets {
            if off[i].len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "offset for study `{}` has length {}, expected {}",
                    s.id,
                    off[i].len(),
                    n
                )));
            }
            ys -= &off[i];
        }
        row += n;
    }
    Ok((x, y))
}
