use oligo::scenario::{Mode, ScenarioConfig};
use oligo::timeline::run_timeline;

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/paper_t5.json");
    let mut cfg = ScenarioConfig::load(path).unwrap();
    for mode in [Mode::Cournot, Mode::Stackelberg] {
        cfg.mode = mode;
        let r = run_timeline(&cfg).unwrap();
        for p in &r.periods {
            println!(
                "{mode:?} t={} x={:.4?} profit={:.3?} change={:.3?} res={:e}",
                p.period, p.x, p.profits, p.change_costs, p.residual
            );
        }
        println!("{:?}", r.metadata);
    }
}
