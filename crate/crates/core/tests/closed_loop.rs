use photon_twin_core::calibration::{
    bc_from_reflectivities, current_grid, fit_sweep, simulate_sweep, FringeParams,
};
use photon_twin_core::linalg::c64;
use photon_twin_core::optics::{build_chip_unitary, ChipParameters, LogicalState, IDENTITY_GATE_PHASES};
use photon_twin_core::sampler::{
    coincidence_probabilities_from, hom_curve, sample_counts, visibility, Overlap,
};
use photon_twin_core::tomography::{
    chi_fidelity, depolarizing_chi, ideal_cnot_chi, mle_reconstruct, run_qpt_simulation,
    simulate_dataset_from_chi, standard_configs, ChiMatrix, EfficiencyVector, MleOptions,
    QptSimulation,
};
use photon_twin_core::vqe::{
    basis_probabilities, energy_oracle, ideal_ansatz_state, pauli_to_projector,
    projector_to_pauli, AnsatzParams, PauliHamiltonian, ProjectorHamiltonian,
};
use photon_twin_core::{seeded_rng, CMatrix};
use rand::Rng;
use std::f64::consts::TAU;

#[test]
fn coincidence_counts_follow_probabilities() {
    let probs = [0.05, 0.02, 0.0, 0.04];
    let pairs = 2.0e6;
    let r = sample_counts(&probs, pairs, 1.0, &mut seeded_rng(9)).unwrap();
    // Pearson statistic with the discarded bucket as a fifth cell; 4 dof.
    let mut chi2 = 0.0;
    for (c, p) in r.counts.iter().zip(&probs) {
        let expect = p * pairs;
        if expect > 0.0 {
            chi2 += (*c as f64 - expect).powi(2) / expect;
        } else {
            assert_eq!(*c, 0);
        }
    }
    let rest = pairs - r.total() as f64;
    let expect_rest = pairs * (1.0 - probs.iter().sum::<f64>());
    chi2 += (rest - expect_rest).powi(2) / expect_rest;
    assert!(chi2 < 18.47, "chi2 = {chi2}");
}

#[test]
fn count_means_converge() {
    let probs = [1.0 / 9.0, 0.0, 0.0, 0.0];
    let mut rng = seeded_rng(2);
    let runs = 400;
    let mean = (0..runs)
        .map(|_| sample_counts(&probs, 900.0, 1.0, &mut rng).unwrap().counts[0] as f64)
        .sum::<f64>()
        / runs as f64;
    // binomial(900, 1/9): σ/√runs ≈ 0.47
    assert!((mean - 100.0).abs() < 2.5, "{mean}");
}

#[test]
fn truth_table_and_success_probability() {
    let chip = ChipParameters::ideal().with_tunable_phases(IDENTITY_GATE_PHASES);
    let u = build_chip_unitary(&chip).unwrap();
    for input in LogicalState::ALL {
        let p = coincidence_probabilities_from(&u, input, Overlap::INDISTINGUISHABLE).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0 / 9.0).abs() < 1e-10);
        let (q1, q2) = (input.qubit1, input.qubit2);
        let target = LogicalState::new(q1, q2 ^ !q1).index();
        for (k, &pk) in p.iter().enumerate() {
            let expect = if k == target { 1.0 / 9.0 } else { 0.0 };
            assert!((pk - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn hom_dip_on_a_balanced_splitter() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bs = CMatrix::from_fn(2, 2, |i, j| if i == j { c64(h, 0.0) } else { c64(0.0, h) });
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    for &x in &grid {
        let curve = hom_curve(&bs, [0, 1], [0, 1], &[0.0, x]).unwrap();
        assert!((visibility(&curve).unwrap() - x * x).abs() < 1e-9);
    }
}

#[test]
fn qpt_recovers_a_known_process() {
    // 0.9 ideal gate + 0.1 white noise
    let ideal = ideal_cnot_chi();
    let noise = depolarizing_chi();
    let mixed = ChiMatrix::new(&ideal.matrix().scale(c64(0.9, 0.0)) + &noise.matrix().scale(c64(0.1, 0.0))).unwrap();
    let configs = standard_configs();
    let data = simulate_dataset_from_chi(&mixed, &configs, 1.0e7, &mut seeded_rng(5)).unwrap();
    let r = mle_reconstruct(&data, &EfficiencyVector::uniform(), &MleOptions::default()).unwrap();
    assert!(chi_fidelity(&r.chi, &mixed).unwrap() > 0.999);
    assert!(r.chi.matrix().max_abs_diff(mixed.matrix()) < 0.01);
}

#[test]
fn fully_distinguishable_photons_degrade_the_gate() {
    let configs = standard_configs();
    let chip = ChipParameters::ideal();
    let fid = |x: f64| {
        let sim = QptSimulation {
            overlap: Overlap::new(x).unwrap(),
            shots: 1.0e5,
            ..Default::default()
        };
        let data = run_qpt_simulation(&chip, &configs, &sim, &mut seeded_rng(1)).unwrap();
        let r = mle_reconstruct(&data, &EfficiencyVector::uniform(), &MleOptions::default()).unwrap();
        chi_fidelity(&r.chi, &ideal_cnot_chi()).unwrap()
    };
    let (good, bad) = (fid(1.0), fid(0.0));
    assert!(good > 0.999 && bad < 0.7, "{good} {bad}");
}

#[test]
fn sweep_fit_recovers_noiseless_fringe() {
    let (b, c) = bc_from_reflectivities(0.45, 0.55).unwrap();
    let truth = FringeParams {
        b,
        c,
        phi0: 0.7,
        alpha: 0.047,
    };
    let currents = current_grid(20.0, 0.1);
    let sweep = simulate_sweep::<photon_twin_core::Rng>(&truth, &currents, None).unwrap();
    let fit = fit_sweep(&sweep).unwrap();
    let p = fit.params;
    assert!((p.b - truth.b).abs() < 1e-6 && (p.c - truth.c).abs() < 1e-6);
    assert!((p.alpha - truth.alpha).abs() < 1e-8 && (p.phi0 - truth.phi0).abs() < 1e-6);
}

#[test]
fn chip_energies_match_the_qubit_model() {
    let h: PauliHamiltonian = projector_to_pauli(&ProjectorHamiltonian::H2_0P4_ANGSTROM).unwrap();
    let proj = pauli_to_projector(&h);
    let chip = ChipParameters::ideal();
    let x = Overlap::INDISTINGUISHABLE;
    let (lo, hi) = {
        let ev = h.matrix().hermitian_eigenvalues().unwrap();
        (ev[0], ev[3])
    };
    assert!((lo - energy_oracle(&h)).abs() < 1e-15);
    let mut rng = seeded_rng(11);
    for _ in 0..100 {
        let params = AnsatzParams::new(std::array::from_fn(|_| rng.random_range(0.0..TAU)));
        let norm = |p: [f64; 4]| p.map(|v| v / p.iter().sum::<f64>());
        let hh = norm(basis_probabilities(&chip, &params, photon_twin_core::tomography::BasisLabel::Hv, x).unwrap());
        let dd = norm(basis_probabilities(&chip, &params, photon_twin_core::tomography::BasisLabel::Da, x).unwrap());
        let measured: f64 = (0..4).map(|k| proj.f[k] * hh[k] + proj.f[4 + k] * dd[k]).sum();
        let direct = h.expectation(&ideal_ansatz_state(&params));
        assert!((measured - direct).abs() < 1e-9);
        assert!(lo - 1e-12 <= measured && measured <= hi + 1e-12);
    }
}
