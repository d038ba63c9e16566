//! Config file through sweep runner to CSV, and thread-count independence.

use noma_secrecy::harness::experiment::records_to_csv;
use noma_secrecy::harness::{parse_config, run_experiment, ExperimentId, Metric, RunOptions};
use noma_secrecy::montecarlo::{simulate, McConfig};
use noma_secrecy::SystemParams;

#[test]
fn config_file_drives_custom_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "# small sweep over the attacker pilot share\n\
         lambda_b_db = -35\n\
         lambda_e_db = -45\n\
         realizations = 40\n\
         seed = 7\n\
         sweep_param = d_i\n\
         sweep_values = 0.1, 0.3\n",
    )
    .unwrap();
    let cfg = parse_config(&cfg_path).unwrap();
    let out = run_experiment(ExperimentId::Custom, &cfg, dir.path(), RunOptions::default()).unwrap();
    assert_eq!(out.records.len(), 2);
    assert!(out.records.iter().all(|r| r.error.is_none() && r.seed == 7 && r.n_realizations == 40));
    // a larger attacker share leaks more
    let leak = |i: usize| out.records[i].get(Metric::ReW0).analytic.unwrap();
    assert!(leak(1) > leak(0));
    let text = std::fs::read_to_string(&out.csv).unwrap();
    assert_eq!(text, records_to_csv(&out.records));
    assert!(out.plots.iter().all(|p| std::fs::read_to_string(p).unwrap().starts_with("<svg")));
}

#[test]
fn thread_count_does_not_change_results() {
    let p = SystemParams::default();
    let base = McConfig { n_realizations: 60, seed: 3, ..McConfig::default() };
    let one = simulate(&p, &McConfig { threads: Some(1), ..base.clone() }).unwrap();
    let three = simulate(&p, &McConfig { threads: Some(3), ..base }).unwrap();
    assert_eq!(one.seeds, three.seeds);
    assert_eq!(one.reports, three.reports);
}
