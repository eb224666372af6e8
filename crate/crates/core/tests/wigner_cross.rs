use std::f64::consts::PI;

use omcat_core::analysis::{
    best_cat_fidelity, negativity_volume, parity, wigner_fock, CatAxis, CatParity, CatSearch, FockWigner,
};
use omcat_core::fock::{cm_to_squeezed_thermal, squeezed_thermal, squeezed_vacuum, SqueezedThermalParams, Truncation};
use omcat_core::gaussian::{gaussian_wigner, ModeCov};
use omcat_core::grid::{GridSpec, PhaseSpaceFunction};
use omcat_core::params::InteractionAngle;
use omcat_core::subtraction::{subtract_phonons, SubtractionOptions};

fn printed_block() -> ModeCov {
    ModeCov::new(0.045, 0.14, 6.28)
}

#[test]
fn reference_state_fock_vs_gaussian() {
    let vb = printed_block();
    let rho = squeezed_thermal(&cm_to_squeezed_thermal(&vb).unwrap(), &Truncation::default()).unwrap();
    let grid = GridSpec::square(5.0, 201);
    let fock = wigner_fock(&rho, grid).unwrap();
    let gauss = gaussian_wigner(&vb, grid).unwrap();
    let diff = fock.max_abs_diff(&gauss).unwrap();
    assert!(diff < 1e-3, "{diff:e}");
    // Truncation error concentrates in the corners of the window.
    assert!(fock.min_value() > -diff);
    assert!(negativity_volume(&fock) < 1e-4);
}

#[test]
fn random_gaussian_states_agree() {
    let draws = [
        (0.1, 0.0, 0.0),
        (0.4, 1.2, 0.3),
        (0.7, -2.0, 0.05),
        (0.9, 2.9, 0.8),
        (1.0, -0.5, 0.0),
        (0.3, 0.1, 1.5),
        (0.55, -1.3, 0.4),
        (1.2, 0.7, 0.02),
        (0.2, -3.0, 2.0),
        (0.8, 1.9, 0.2),
    ];
    let grid = GridSpec::square(5.0, 61);
    for (r, phi, n_bar) in draws {
        let params = SqueezedThermalParams { r, phi, n_bar };
        let n_trunc = Truncation::suggest_n_trunc(&params.covariance(), 1e-9).max(40);
        let rho = squeezed_thermal(&params, &Truncation::with_n_trunc(n_trunc)).unwrap();
        let fock = wigner_fock(&rho, grid).unwrap();
        let gauss = gaussian_wigner(&params.covariance(), grid).unwrap();
        assert!(fock.max_abs_diff(&gauss).unwrap() < 1e-3, "{params:?}");
    }
}

#[test]
fn subtracted_squeezed_vacuum_is_negative_at_origin() {
    let rho = squeezed_vacuum(1.25, -0.04, 120).unwrap().to_density();
    let theta = InteractionAngle::from_tan(0.11).unwrap();
    let one = subtract_phonons(&rho, theta, 1, &SubtractionOptions::default()).unwrap();
    let w0 = FockWigner::new(&one.rho_b).value(0.0, 0.0);
    assert!((w0 + 1.0 / PI).abs() < 1e-10, "{w0}");
}

#[test]
fn origin_value_tracks_parity() {
    let vb = printed_block();
    let rho = squeezed_thermal(&cm_to_squeezed_thermal(&vb).unwrap(), &Truncation::default()).unwrap();
    let theta = InteractionAngle::from_tan(0.11).unwrap();
    for k in 0..=2 {
        let s = subtract_phonons(&rho, theta, k, &SubtractionOptions::default()).unwrap();
        let w0 = FockWigner::new(&s.rho_b).value(0.0, 0.0);
        assert!((PI * w0 - parity(&s.rho_b)).abs() < 1e-10, "k={k}");
    }
}

#[test]
fn subtracted_states_have_negativity_and_normalization() {
    let vb = printed_block();
    let rho = squeezed_thermal(&cm_to_squeezed_thermal(&vb).unwrap(), &Truncation::default()).unwrap();
    let theta = InteractionAngle::from_tan(0.11).unwrap();
    let grid = GridSpec::square(16.0, 241);
    for k in 1..=2 {
        let s = subtract_phonons(&rho, theta, k, &SubtractionOptions::default()).unwrap();
        let w = wigner_fock(&s.rho_b, grid).unwrap();
        assert!((w.integral() - 1.0).abs() < 1e-9, "k={k}: {}", w.integral());
        assert!(negativity_volume(&w) > 0.0, "k={k}");
        assert!(w.min_value() < 0.0);
    }
}

#[test]
fn conditioned_cat_fidelities() {
    // Regression anchors; the search runs along the anti-squeezed axis.
    let vb = printed_block();
    let rho = squeezed_thermal(&cm_to_squeezed_thermal(&vb).unwrap(), &Truncation::default()).unwrap();
    let theta = InteractionAngle::from_tan(0.11).unwrap();
    let search = CatSearch::default();
    let fits: Vec<_> = [(1, CatParity::Odd), (2, CatParity::Even)]
        .into_iter()
        .map(|(k, parity)| {
            let s = subtract_phonons(&rho, theta, k, &SubtractionOptions::default()).unwrap();
            best_cat_fidelity(&s.rho_b, parity, &search).unwrap()
        })
        .collect();
    assert!((fits[0].fidelity - 0.707_393).abs() < 1e-5, "{:?}", fits[0]);
    assert!((fits[0].alpha.norm() - 2.4921).abs() < 1e-3);
    assert!((fits[1].fidelity - 0.662_189).abs() < 1e-5, "{:?}", fits[1]);
    assert!((fits[1].alpha.norm() - 3.3521).abs() < 1e-3);
    // Along the squeezed quadrature the best odd cat collapses to |1>.
    let squeezed = CatSearch { axis: CatAxis::Real, ..CatSearch::default() };
    let s = subtract_phonons(&rho, theta, 1, &SubtractionOptions::default()).unwrap();
    assert!(best_cat_fidelity(&s.rho_b, CatParity::Odd, &squeezed).unwrap().fidelity < fits[0].fidelity);
}
