//! Driving the experiment runner from a configuration string, as the
//! `blaschke-lab` binary does with `--config`.

use blaschke_lab::runner::{parse_config, run};

const CONFIG: &str = r#"
experiment = "spectrum"
seed = 3

[cocycle]
preset = "constant"
zeros = [[0.5, 0.0], [0.0, 0.3]]

[spectrum]
cutoff = 20
steps = 1000
exponents = 5
"#;

fn main() {
    let config = match parse_config(CONFIG) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let report = run(&config).expect("spectrum run");
    for line in &report.summary {
        println!("{line}");
    }
    let dir = std::env::temp_dir().join("blaschke-lab-example");
    let path = report.write(&dir).expect("writable temp dir");
    println!("wrote {}", path.display());

    match parse_config("experiment = \"spectrum\"\n[cocycle]\npreset = \"constant\"\nzeros = [[1.0, 0.0]]\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("\nrejected as expected:\n{e}"),
    }
}
