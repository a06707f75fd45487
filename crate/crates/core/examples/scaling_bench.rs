//! Training plus prediction time against corpus size.
//!
//! ```text
//! cargo run --release --example scaling_bench -- 128 256 512 1024
//! ```

use polarimeter::classifier::ClassifierConfig;
use polarimeter::eval::benchmark_scaling;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut sizes: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        sizes = vec![128.0, 256.0, 512.0, 1024.0];
    }
    let report = benchmark_scaling(&sizes, &ClassifierConfig::default(), 0);
    for p in &report.points {
        println!("{:>8.0} KB  {:>7.3} s", p.size_kb, p.seconds);
    }
    if let Some(r2) = report.r_squared {
        println!("{:.2} ms/KB, R² {r2:.4}", report.slope * 1e3);
    }
    Ok(())
}
