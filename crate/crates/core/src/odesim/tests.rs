use super::*;
use crate::network::Sigmoid;
use crate::neuron::Conductances;
use alloc::vec;

fn ml() -> NeuronModel {
    NeuronModel::morris_lecar(Conductances::new(0.5, 1.0, 2.0))
}

fn pair(g: f64) -> CouplingGraph {
    let s = Sigmoid::Tanh {
        center: 0.0,
        width: 0.15,
    };
    CouplingGraph::all_to_all(2, 1.0, vec![g; 2], s).unwrap()
}

fn periods(t: &[f64]) -> Vec<f64> {
    t.windows(2).map(|w| w[1] - w[0]).collect()
}

#[test]
fn sine_peaks_are_found_to_step_accuracy() {
    let dt = 1e-3;
    let times: Vec<f64> = (0..40_000).map(|k| k as f64 * dt).collect();
    let v: Vec<f64> = times.iter().map(|t| libm::sin(*t)).collect();
    let s = detect_spikes(&times, &v, 0.5);
    assert_eq!(s.len(), 6);
    for (k, t) in s.iter().enumerate() {
        let exact = core::f64::consts::FRAC_PI_2 + 2.0 * core::f64::consts::PI * k as f64;
        assert!((t - exact).abs() < dt, "{t} {exact}");
    }
}

#[test]
fn subthreshold_trace_has_no_spikes() {
    let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
    let v: Vec<f64> = times.iter().map(|t| 0.4 * libm::sin(*t)).collect();
    assert!(detect_spikes(&times, &v, 0.5).is_empty());
}

#[test]
fn dip_below_threshold_splits_excursions() {
    let times: Vec<f64> = (0..9).map(|k| k as f64).collect();
    let v = [0.0, 1.0, 2.0, 1.0, 0.2, 1.0, 3.0, 1.0, 0.0];
    let s = detect_spikes(&times, &v, 0.5);
    assert_eq!(s, vec![2.0, 6.0]);
}

#[test]
fn too_large_step_is_rejected() {
    let mut o = OdeOptions::new(0.02, 1.0);
    o.dt = 0.002;
    let r = simulate(&[ml()], &CouplingGraph::new(1, vec![0.0]).unwrap(), &[(0.2, -0.3)], &o);
    assert!(matches!(r, Err(Error::StepTooLarge { .. })));
}

#[test]
fn decoupled_cell_has_a_steady_period() {
    let mut o = OdeOptions::new(0.02, 40.0);
    o.mode = CouplingMode::Off;
    let traj = simulate(&[ml(), ml()], &pair(0.67), &[(0.1, -0.3), (0.6, 0.2)], &o).unwrap();
    assert!(traj.info.max_excursion < 1e-6);
    for i in 0..2 {
        let p = periods(&traj.spike_times(i));
        assert!(p.len() >= 3, "{p:?}");
        let last = *p.last().unwrap();
        for w in &p[1..] {
            assert!((w - last).abs() < 5e-3 * last, "{p:?}");
        }
    }
    let (a, b) = (traj.spike_times(0), traj.spike_times(1));
    assert!((periods(&a).last().unwrap() - periods(&b).last().unwrap()).abs() < 1e-3);
}

#[test]
fn spike_times_increase_per_neuron_and_stay_in_the_box() {
    let o = OdeOptions::new(0.02, 20.0);
    let traj = simulate(&[ml(), ml()], &pair(0.67), &[(0.1, -0.3), (0.6, 0.2)], &o).unwrap();
    assert!(traj.info.max_excursion < 1e-6);
    for i in 0..2 {
        let s = traj.spike_times(i);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn halving_the_step_barely_moves_spikes() {
    let mut o = OdeOptions::new(0.02, 20.0);
    o.dt = 0.001;
    let coarse = simulate(&[ml(), ml()], &pair(0.67), &[(0.1, -0.3), (0.6, 0.2)], &o).unwrap();
    o.dt = 0.0005;
    let fine = simulate(&[ml(), ml()], &pair(0.67), &[(0.1, -0.3), (0.6, 0.2)], &o).unwrap();
    let period = *periods(&fine.spike_times(0)).last().unwrap();
    for i in 0..2 {
        let (a, b) = (coarse.spike_times(i), fine.spike_times(i));
        assert_eq!(a.len(), b.len());
        for (s, t) in a.iter().zip(&b) {
            assert!((s - t).abs() < 1e-3 * period, "{s} {t}");
        }
    }
}

#[test]
fn linearized_gains_have_the_expected_signs() {
    let o = OdeOptions::new(0.02, 15.0);
    let traj = simulate(&[ml(), ml()], &pair(0.67), &[(0.3, -0.2), (0.3, -0.2)], &o).unwrap();
    let gains = linearized_gains(&ml(), &traj, 0, 0.67);
    assert_eq!(gains.len(), traj.times.len());
    assert!(gains.iter().all(|g| g.k >= 0.0));
    assert!(gains.iter().all(|g| g.a - g.k < 0.0));
    let zero = linearized_gains(&ml(), &traj, 0, 0.0);
    assert!(zero.iter().all(|g| g.k == 0.0));
}

#[test]
fn coupling_waits_for_its_start_time() {
    let mut o = OdeOptions::new(0.02, 5.0);
    o.coupling_on_time = 10.0;
    let on = simulate(&[ml(), ml()], &pair(0.67), &[(0.1, -0.3), (0.6, 0.2)], &o).unwrap();
    o.mode = CouplingMode::Off;
    let off = simulate(&[ml(), ml()], &pair(0.67), &[(0.1, -0.3), (0.6, 0.2)], &o).unwrap();
    assert_eq!(on.v, off.v);
}
