use std::path::Path;

use windopf::driver::{solve_wind_opf, InitMode, SocaSolution, SolveOptions, SolveStatus};
use windopf::netmodel::{parse_matpower_case, PowerNetwork, WindFarm};
use windopf::windcost::GmmModel;

fn case(name: &str) -> PowerNetwork {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/matpower").join(format!("{name}.m"));
    parse_matpower_case(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn with_wind(net: &PowerNetwork, bus: usize) -> PowerNetwork {
    let gmm = GmmModel::new(vec![0.55, 0.45], vec![25.0, 60.0], vec![8.0, 12.0], 90.0).unwrap();
    let farm = WindFarm { bus, p_min_mw: 0.0, p_max_mw: 90.0, power_factor: 0.975, k_l: 45.0, k_h: 55.0, gmm, pwl_segments: 12 };
    net.with_wind_farms(vec![farm]).unwrap()
}

fn solve(net: &PowerNetwork, init: InitMode) -> SocaSolution {
    solve_wind_opf(net, &SolveOptions { init, ..SolveOptions::default() }).unwrap()
}

#[test]
fn epigraph_sits_on_the_pwl_cost() {
    let sol = solve(&with_wind(&case("case30"), 5), InitMode::Flat);
    assert_eq!(sol.status, SolveStatus::Converged);
    let w = &sol.wind[0];
    assert!(w.p_mw > 0.0 && w.p_mw <= 90.0 + 1e-6);
    assert!((w.gamma - w.pwl_cost).abs() <= 1e-5 * w.pwl_cost.abs().max(1.0), "{} vs {}", w.gamma, w.pwl_cost);
    assert!((w.gamma - sol.wind_pwl[0].eval(w.p_mw)).abs() <= 1e-5 * w.gamma.abs().max(1.0));
}

#[test]
fn cost_split_adds_up() {
    let sol = solve(&with_wind(&case("case30"), 5), InitMode::Flat);
    assert!((sol.fossil_cost + sol.wind_cost - sol.objective).abs() <= 1e-9 * sol.objective.abs());
    let (a, b) = sol.cost_split_pct();
    assert!((a + b - 100.0).abs() < 1e-9 && b > 0.0);
}

#[test]
fn scheduled_wind_displaces_fossil_output() {
    // case30 fuel is far cheaper than the penalties, so only the fossil part falls.
    let base = solve(&case("case30"), InitMode::Flat);
    let wind = solve(&with_wind(&case("case30"), 5), InitMode::Flat);
    assert!(wind.fossil_cost < base.objective, "{} vs {}", wind.fossil_cost, base.objective);
}

#[test]
fn starting_point_does_not_change_the_answer() {
    let net = case("case30");
    let flat = solve(&net, InitMode::Flat);
    let dc = solve(&net, InitMode::DcOpf);
    assert_eq!(dc.status, SolveStatus::Converged);
    assert!((flat.objective - dc.objective).abs() <= 1e-5 * flat.objective, "{} vs {}", flat.objective, dc.objective);
}

#[test]
fn trace_carries_gamma_and_rounds_for_every_iteration() {
    let sol = solve(&case("case118"), InitMode::Flat);
    let trace = &sol.trace.iterations;
    assert!(!trace.is_empty());
    for (i, it) in trace.iter().enumerate() {
        assert_eq!(it.iteration, i + 1);
        assert_eq!(it.gamma.len(), 186);
        assert!(!it.rounds.is_empty());
        let max = it.gamma.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert!((max - it.max_gamma).abs() < 1e-15);
    }
    let last = trace.last().unwrap();
    assert!(last.max_gamma <= SolveOptions::default().tol_gamma);
}

#[test]
fn load_growth_raises_the_cost() {
    let net = case("case118");
    let lo = solve(&net.with_load_scale(0.9), InitMode::Flat);
    let hi = solve(&net.with_load_scale(1.1), InitMode::Flat);
    assert!(lo.objective < hi.objective);
}
