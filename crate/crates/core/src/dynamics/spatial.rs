//! Spatial vectors in world-origin Plücker coordinates.
//!
//! Internal convention: motion vectors are `[ω; v_O]` and force vectors are
//! `[n_O; f]`, angular part first, both about the world origin with world
//! axes. The public API converts to the mixed `[linear; angular]` layout.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

pub(crate) type V6 = Vector6<f64>;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[inline]
pub(crate) fn ang(v: &V6) -> Vector3<f64> {
    v.fixed_rows::<3>(0).into_owned()
}

#[inline]
pub(crate) fn lin(v: &V6) -> Vector3<f64> {
    v.fixed_rows::<3>(3).into_owned()
}

#[inline]
pub(crate) fn join(top: Vector3<f64>, bottom: Vector3<f64>) -> V6 {
    V6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

/// Motion cross product `a ×m b`.
pub(crate) fn cross_motion(a: &V6, b: &V6) -> V6 {
    let (w, v) = (ang(a), lin(a));
    let (w2, v2) = (ang(b), lin(b));
    join(w.cross(&w2), w.cross(&v2) + v.cross(&w2))
}

/// Force cross product `a ×f f`.
pub(crate) fn cross_force(a: &V6, f: &V6) -> V6 {
    let (w, v) = (ang(a), lin(a));
    let (n, fl) = (ang(f), lin(f));
    join(w.cross(&n) + v.cross(&fl), w.cross(&fl))
}

/// Spatial inertia of a body with mass `m`, world CoM `c` and rotational
/// inertia `ic` about the CoM in world axes.
pub(crate) fn spatial_inertia(m: f64, c: &Vector3<f64>, ic: &Matrix3<f64>) -> Matrix6<f64> {
    let cx = skew(c);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ic - m * cx * cx));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(m * cx));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-m * cx));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * m));
    out
}

/// Map from the mixed base velocity `[v_B; ω]` to the base spatial
/// velocity `[ω; v_B + p_B × ω]`.
pub(crate) fn base_map(p: &Vector3<f64>) -> Matrix6<f64> {
    let mut s = Matrix6::zeros();
    s.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
    s.fixed_view_mut::<3, 3>(3, 0).copy_from(&Matrix3::identity());
    s.fixed_view_mut::<3, 3>(3, 3).copy_from(&skew(p));
    s
}

/// Mixed twist `[ṗ; ω]` of the point `p` moving with spatial velocity `v`.
pub(crate) fn mixed_twist(v: &V6, p: &Vector3<f64>) -> V6 {
    let w = ang(v);
    join(lin(v) - p.cross(&w), w)
}

/// World-origin force `[n_O; f]` of a force `f` and torque `n` acting at `p`.
pub(crate) fn force_at(p: &Vector3<f64>, f: &Vector3<f64>, n: &Vector3<f64>) -> V6 {
    join(n + p.cross(f), *f)
}
