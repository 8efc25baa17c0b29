//! Generates the synthetic dataset, trains, evaluates on the holdout split, and
//! runs the composite benchmark on the bundled office map.

use std::time::Instant;

use beliefnav::{
    gen_composite, generate_dataset, office_map, trainer, GenConfig, LanguageConfig, Lexicon,
    TrainConfig,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let t0 = Instant::now();
    let map = office_map();
    let lang = LanguageConfig::default();
    let data = generate_dataset(&map, &lang.dictionary, &GenConfig { seed, ..GenConfig::default() }).unwrap();
    println!("{} samples in {:.1?}", data.samples.len(), t0.elapsed());
    let lexicon = Lexicon::build(&map, &lang, 128, seed);
    let config = TrainConfig {
        learning_rate: lr,
        epochs,
        seed,
        ..TrainConfig::default()
    };
    let out = trainer::train_with_progress(&data.samples, &map, lexicon, &config, |e, l| {
        println!("epoch {e}: loss {l:.4} ({:.1?})", t0.elapsed())
    })
    .unwrap();
    println!("{}", out.report);
    for steps in [1, 3, 5] {
        let q = gen_composite(&map, 11, 100, steps, 1.0).unwrap();
        let r = trainer::benchmark_composite(&q, &map, &out.params);
        print!("{r}");
        for (i, e) in r.failures.iter().take(3) {
            println!("  fail: {i}: {e}");
        }
    }
    println!("total {:.1?}", t0.elapsed());
}
