fn main() {
    let cfg = siegel_core::verify::SuiteConfig { seed: 7, trials: 17, budget: 100_000 };
    for (name, s) in [("gauss", siegel_core::verify::Suite::Gauss), ("sym", siegel_core::verify::Suite::Sym), ("theta", siegel_core::verify::Suite::Theta), ("hecke", siegel_core::verify::Suite::Hecke)] {
        let t = std::time::Instant::now();
        let rep = siegel_core::verify::run_suite(s, &cfg).unwrap();
        println!("{name}: pass={} in {:?}", rep.pass, t.elapsed());
    }
}
