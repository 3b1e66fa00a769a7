use harbor_core::eta::{run_benchmark, BenchmarkConfig, SampleOptions};
use harbor_core::grid::GridConfig;

fn small() -> BenchmarkConfig {
    let mut cfg = BenchmarkConfig {
        samples: SampleOptions {
            grid: GridConfig {
                half_extent_cells: 5,
                cell_size_deg: 0.15,
                ..GridConfig::default()
            },
            ..SampleOptions::default()
        },
        ..BenchmarkConfig::default()
    };
    cfg.traffic.n_vessels = 30;
    cfg
}

#[test]
fn reference_beats_kinematic_on_perturbed_traffic() {
    let r = run_benchmark(&small(), 7).unwrap();
    println!("{r:?}");
    assert!(r.reference.mape_percent <= 0.5 * r.kinematic.mape_percent);
}

#[test]
fn unperturbed_traffic_is_nearly_kinematic() {
    let mut cfg = small();
    cfg.traffic.weather_perturbation = 0.0;
    let r = run_benchmark(&cfg, 3).unwrap();
    // one sampling interval
    assert!(r.kinematic.rmse_minutes <= cfg.traffic.sampling_interval_minutes as f64, "{r:?}");
    assert!(r.reference.rmse_minutes <= cfg.traffic.sampling_interval_minutes as f64, "{r:?}");
}

#[test]
fn benchmark_is_deterministic() {
    assert_eq!(run_benchmark(&small(), 11).unwrap(), run_benchmark(&small(), 11).unwrap());
}
