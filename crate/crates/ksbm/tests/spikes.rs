use ksbm::signatures::lead_matrix;
use ksbm::spikes::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spikes(seed: u64, trials: usize, latest: f64) -> Vec<Spike> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spikes = Vec::new();
    for t in 0..trials {
        for u in 0..3 {
            for _ in 0..rng.random_range(0..12) {
                spikes.push(Spike {
                    unit_id: u.to_string(),
                    trial_id: t.to_string(),
                    spike_time_s: rng.random_range(0.0..latest),
                });
            }
        }
    }
    spikes
}

fn config(trials: usize) -> SpikeIngestConfig {
    SpikeIngestConfig {
        trials: Some((0..trials).map(|t| Trial { trial_id: t.to_string(), start_s: 0.0, end_s: 1.0 }).collect()),
        units: Some(vec!["0".into(), "1".into(), "2".into(), "3".into()]),
        ..SpikeIngestConfig::default()
    }
}

fn permuted(spikes: &[Spike], perm: &[usize]) -> Vec<Spike> {
    spikes
        .iter()
        .map(|s| Spike { trial_id: perm[s.trial_id.parse::<usize>().unwrap()].to_string(), ..s.clone() })
        .collect()
}

#[test]
fn trial_order_leaves_lead_unchanged_when_traces_settle() {
    // spikes stop 0.5 s before each trial ends, beyond the 0.4 s kernel support
    for seed in 0..5 {
        let spikes = random_spikes(seed, 4, 0.5);
        let base = ingest_spikes(&spikes, &config(4)).unwrap();
        let moved = ingest_spikes(&permuted(&spikes, &[2, 0, 3, 1]), &config(4)).unwrap();
        assert_ne!(base.path.values, moved.path.values);
        let (a, b) = (lead_matrix(&base.path), lead_matrix(&moved.path));
        let scale = a.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        assert!((&a - &b).iter().all(|d| d.abs() < 1e-10 * scale.max(1.0)), "{a} vs {b}");
        assert!(base.path.values.column(3).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn trial_order_changes_lead_only_by_boundary_terms() {
    for seed in 0..5 {
        let spikes = random_spikes(seed, 4, 1.0);
        let base = ingest_spikes(&spikes, &config(4)).unwrap();
        let moved = ingest_spikes(&permuted(&spikes, &[3, 2, 1, 0]), &config(4)).unwrap();
        let peak = base.path.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // trial interiors and the joins between them: 2T − 1 pieces, each moving by at most `peak`
        let pieces = 7.0;
        let bound = 0.5 * pieces * pieces * peak * peak;
        let diff = &lead_matrix(&base.path) - &lead_matrix(&moved.path);
        assert!(diff.iter().all(|d| d.abs() <= bound), "{diff} vs {bound}");
    }
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spikes_csv = dir.path().join("spikes.csv");
    let trials_csv = dir.path().join("trials.csv");
    std::fs::write(&spikes_csv, "unit_id,trial_id,spike_time_s\na,t1,0.010\nb,t1,0.020\na,t2,0.5\n").unwrap();
    std::fs::write(&trials_csv, "trial_id,start_s,end_s\nt2,0.0,1.0\nt1,0.0,0.1\n").unwrap();
    let spikes = read_spikes(&spikes_csv).unwrap();
    let trials = read_trials(&trials_csv).unwrap();
    assert_eq!(spikes.len(), 3);
    let out = ingest_spikes(&spikes, &SpikeIngestConfig { trials: Some(trials), ..SpikeIngestConfig::default() }).unwrap();
    assert_eq!(out.trials, vec!["t1", "t2"]);
    assert_eq!(out.units, vec!["a", "b"]);
    assert_eq!(out.trial_offsets, vec![0, 50]);
    assert_eq!(out.path.len(), 550);
    let kernel = exponential_kernel(0.002, 0.04, 10.0);
    assert_eq!(out.path.values[[5, 0]], kernel[0]);
    assert_eq!(out.path.values[[4, 0]], 0.0);
}

#[test]
fn invalid_config_rejected() {
    let spikes = random_spikes(0, 1, 0.5);
    for bad in [
        SpikeIngestConfig { dt: 0.0, ..config(1) },
        SpikeIngestConfig { tau: -1.0, ..config(1) },
    ] {
        assert!(ingest_spikes(&spikes, &bad).is_err());
    }
}
