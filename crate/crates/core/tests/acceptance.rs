use sparsesig::acceptance::{run, Options, IDS};

fn main() {
    let opts = Options::default();
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for id in IDS.iter().copied().filter(|id| only.is_empty() || only.contains(id)) {
        let o = run(id, &opts);
        println!("{o}");
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
