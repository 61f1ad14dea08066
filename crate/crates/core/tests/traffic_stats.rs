use leo_fusion::orbital::ZoneGrid;
use leo_fusion::traffic::{
    arrival_rates, generate_tasks, synth_connection_index, DestSampler, SyntheticIndex,
    TaskTemplate,
};

#[test]
fn task_count_matches_poisson_mean() {
    let grid = ZoneGrid::default();
    let eta = synth_connection_index(SyntheticIndex::Uniform, &grid, 0).unwrap();
    let rates = arrival_rates(200.0, &eta).unwrap();
    let template = TaskTemplate::default();
    let dest = DestSampler::Eta(eta);
    let total: usize = (0..100)
        .map(|seed| {
            generate_tasks(&rates, 10.0, seed, &template, &dest)
                .unwrap()
                .len()
        })
        .sum();
    let mean = total as f64 / 100.0;
    assert!((mean - 2000.0).abs() <= 100.0, "mean {mean}");
}

#[test]
fn hotspot_zones_generate_their_share() {
    let grid = ZoneGrid::default();
    let eta = synth_connection_index(
        SyntheticIndex::Hotspots {
            count: 4,
            fraction: 0.8,
        },
        &grid,
        3,
    )
    .unwrap();
    let rates = arrival_rates(200.0, &eta).unwrap();
    let tasks = generate_tasks(
        &rates,
        10.0,
        3,
        &TaskTemplate::default(),
        &DestSampler::Eta(eta.clone()),
    )
    .unwrap();
    let hot: Vec<_> = leo_fusion::traffic::hottest_zones(&eta);
    assert_eq!(hot.len(), 4);
    let from_hot = tasks
        .iter()
        .filter(|t| hot.contains(&t.source_zone))
        .count();
    let share = from_hot as f64 / tasks.len() as f64;
    assert!((share - 0.8).abs() < 0.05, "share {share}");
    assert!(tasks.iter().all(|t| t.source_zone != t.dest_zone));
}
