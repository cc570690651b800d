//! Row-wise affine transformations of an embedding set: translation,
//! reflection over a hyperplane, rotation through a 2-D plane, homothety
//! and dilation, plus the fixed parameter presets used for comparisons.

use crate::embio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, normalized};
use crate::par::{map_indexed, parallel_enabled};

/// The unit diagonal vector (every component 1/sqrt(d)).
pub fn v_diag(d: usize) -> Vec<f64> {
    vec![1.0 / (d as f64).sqrt(); d]
}

/// `v_diag` with the first component negated.
pub fn v_diag_neg(d: usize) -> Vec<f64> {
    let mut v = v_diag(d);
    v[0] = -v[0];
    v
}

fn check_dim(set: &EmbeddingSet, v: &[f64]) -> Result<()> {
    if v.len() != set.dim() {
        return Err(Error::DimMismatch {
            expected: set.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

fn apply_rows(set: &EmbeddingSet, suffix: &str, f: impl Fn(&[f64], &mut [f64]) + Sync) -> EmbeddingSet {
    let d = set.dim();
    let rows = map_indexed(set.len(), parallel_enabled(), |i| {
        let mut out = vec![0.0; d];
        f(set.row(i), &mut out);
        out
    });
    let matrix: Vec<f64> = rows.into_iter().flatten().collect();
    set.with_matrix(format!("{}{}", set.name, suffix), matrix)
        .expect("transform preserves shape")
}

/// v -> v + x
pub fn translate(set: &EmbeddingSet, x: &[f64]) -> Result<EmbeddingSet> {
    check_dim(set, x)?;
    Ok(apply_rows(set, "-translated", |v, out| {
        for (o, (a, b)) in out.iter_mut().zip(v.iter().zip(x)) {
            *o = a + b;
        }
    }))
}

/// v -> v - 2 (v.a / a.a) a, the reflection over the hyperplane orthogonal to a.
pub fn reflect(set: &EmbeddingSet, a: &[f64]) -> Result<EmbeddingSet> {
    check_dim(set, a)?;
    let aa = dot(a, a);
    if aa == 0.0 {
        return Err(Error::InvalidArg("reflection normal must be nonzero".into()));
    }
    Ok(apply_rows(set, "-reflected", |v, out| {
        let c = 2.0 * dot(v, a) / aa;
        for (o, (vi, ai)) in out.iter_mut().zip(v.iter().zip(a)) {
            *o = vi - c * ai;
        }
    }))
}

/// Rotation through the plane spanned by u and x by angle theta.
///
/// The pair is Gram-Schmidt orthonormalized before the rank-2 update is
/// applied; pass `raw_basis = true` to use the vectors verbatim (the result
/// is then not norm-preserving for a non-orthonormal pair).
pub fn rotate(set: &EmbeddingSet, u: &[f64], x: &[f64], theta: f64, raw_basis: bool) -> Result<EmbeddingSet> {
    check_dim(set, u)?;
    check_dim(set, x)?;
    let (bu, bx) = if raw_basis {
        (u.to_vec(), x.to_vec())
    } else {
        orthonormal_pair(u, x)?
    };
    let (sin_t, cos_t) = theta.sin_cos();
    Ok(apply_rows(set, "-rotated", |v, out| {
        let du = dot(&bu, v);
        let dx = dot(&bx, v);
        // v + sin(t) (x (u.v) - u (x.v)) + (cos(t)-1) (u (u.v) + x (x.v))
        let cu = -sin_t * dx + (cos_t - 1.0) * du;
        let cx = sin_t * du + (cos_t - 1.0) * dx;
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i] + cu * bu[i] + cx * bx[i];
        }
    }))
}

fn orthonormal_pair(u: &[f64], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let bu = normalized(u).ok_or_else(|| Error::InvalidArg("rotation basis vector is zero".into()))?;
    let nx = normalized(x).ok_or_else(|| Error::InvalidArg("rotation basis vector is zero".into()))?;
    let cos_angle = dot(&bu, &nx);
    if 1.0 - cos_angle.abs() < 1e-10 {
        return Err(Error::InvalidArg(
            "rotation basis vectors are parallel within tolerance".into(),
        ));
    }
    let proj = dot(x, &bu);
    let ortho: Vec<f64> = x.iter().zip(&bu).map(|(xi, ui)| xi - proj * ui).collect();
    let bx = normalized(&ortho).expect("non-parallel pair has nonzero residual");
    Ok((bu, bx))
}

/// v -> a + lambda (v - a)
pub fn homothety(set: &EmbeddingSet, a: &[f64], lambda: f64) -> Result<EmbeddingSet> {
    check_dim(set, a)?;
    if lambda == 0.0 {
        return Err(Error::InvalidArg("homothety ratio must be nonzero".into()));
    }
    Ok(apply_rows(set, "-homothety", |v, out| {
        for (o, (vi, ai)) in out.iter_mut().zip(v.iter().zip(a)) {
            *o = ai + lambda * (vi - ai);
        }
    }))
}

/// Homothety centered at the origin.
pub fn dilate(set: &EmbeddingSet, lambda: f64) -> Result<EmbeddingSet> {
    let a = vec![0.0; set.dim()];
    homothety(set, &a, lambda)
}

/// Fixed transform parameterizations used for the comparison grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Translate by 1 * v_diag.
    Translation,
    /// Translate by the zero vector (the literal reading of a zero direction).
    TranslationNull,
    /// Dilation with ratio 2.
    Dilation,
    /// Homothety with center v_diag and ratio 0.25.
    Homothety,
    /// Reflection over the hyperplane orthogonal to v_diag.
    Reflection,
    /// Rotation through the (v_diag, v_diagNeg) plane by pi/4.
    Rotation2d,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translation" => Ok(Preset::Translation),
            "translation-null" => Ok(Preset::TranslationNull),
            "dilation" => Ok(Preset::Dilation),
            "homothety" => Ok(Preset::Homothety),
            "reflection" => Ok(Preset::Reflection),
            "rotation2d" | "rotation" => Ok(Preset::Rotation2d),
            other => Err(Error::InvalidArg(format!("unknown preset '{other}'"))),
        }
    }
}

pub const ALL_PRESETS: [Preset; 6] = [
    Preset::Translation,
    Preset::TranslationNull,
    Preset::Dilation,
    Preset::Homothety,
    Preset::Reflection,
    Preset::Rotation2d,
];

pub fn apply_preset(set: &EmbeddingSet, preset: Preset) -> Result<EmbeddingSet> {
    let d = set.dim();
    match preset {
        Preset::Translation => translate(set, &v_diag(d)),
        Preset::TranslationNull => translate(set, &vec![0.0; d]),
        Preset::Dilation => dilate(set, 2.0),
        Preset::Homothety => homothety(set, &v_diag(d), 0.25),
        Preset::Reflection => reflect(set, &v_diag(d)),
        Preset::Rotation2d => rotate(set, &v_diag(d), &v_diag_neg(d), std::f64::consts::FRAC_PI_4, false),
    }
}
