use omcat_core::linalg::max_abs;
use omcat_core::params::InteractionAngle;
use omcat_core::subtraction::{beamsplitter_oracle, interior_max_diff, FactoredPropagator, JointDims};
use omcat_core::CMatrix;

const N_TRUNC: usize = 20;
const GUARD: usize = 2;

fn dims() -> JointDims {
    JointDims::new(N_TRUNC + GUARD, N_TRUNC + GUARD)
}

#[test]
fn factored_form_equals_exponential() {
    let dims = dims();
    for theta in [0.05, 0.11, 0.3] {
        let angle = InteractionAngle::new(theta).unwrap();
        let factored = FactoredPropagator::new(angle, dims).to_dense();
        let oracle = beamsplitter_oracle(angle, dims);
        let diff = interior_max_diff(&factored, &oracle, &dims, N_TRUNC);
        assert!(diff < 1e-8, "theta {theta}: {diff:e}");
    }
}

#[test]
fn unitary_on_interior() {
    let dims = dims();
    let angle = InteractionAngle::from_tan(0.11).unwrap();
    let u = FactoredPropagator::new(angle, dims).to_dense();
    let gram = u.adjoint() * &u;
    let id = CMatrix::identity(dims.len(), dims.len());
    assert!(interior_max_diff(&gram, &id, &dims, N_TRUNC) < 1e-8);
}

#[test]
fn factors_multiply_to_apply() {
    let dims = JointDims::new(8, 4);
    let p = FactoredPropagator::new(InteractionAngle::new(0.7).unwrap(), dims);
    let dense = p.to_dense();
    let v = omcat_core::CVector::from_fn(dims.len(), |i, _| omcat_core::Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
    let diff = (p.apply(&v) - &dense * &v).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(diff < 1e-12);
    let [l, m, r] = p.factors();
    assert!(max_abs(&(l * m * r - dense)) < 1e-14);
}
