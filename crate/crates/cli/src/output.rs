//! Result files. Everything is rendered in memory first so that a failed run writes nothing.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use randmean::grid::DistributionGrid;
use randmean::sim::SuiteReport;

use crate::config::{Command, RunConfig};
use crate::{Failure, EXIT_NUMERICAL};

pub const RESULTS_FILE: &str = "results.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const PLOT_FILE: &str = "plot.py";
pub const REPORT_FILE: &str = "report.json";

pub struct Outputs {
    files: Vec<(&'static str, String)>,
    /// Set when the run completed but a validation check failed.
    failed: Option<String>,
}

fn csv_grid(grid: &DistributionGrid) -> String {
    let mut s = String::from("sigma,value,err\n");
    for (x, v, e) in grid.rows() {
        let _ = writeln!(s, "{x:.16e},{v:.16e},{e:.16e}");
    }
    s
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn grid_plot(command: Command) -> String {
    let ylabel = if command.is_density() { "density" } else { "CDF" };
    format!(
        "import csv\n\
         import matplotlib.pyplot as plt\n\
         \n\
         with open(\"{RESULTS_FILE}\") as f:\n\
         \x20   rows = list(csv.DictReader(f))\n\
         x = [float(r[\"sigma\"]) for r in rows]\n\
         y = [float(r[\"value\"]) for r in rows]\n\
         plt.plot(x, y)\n\
         plt.xlabel(\"sigma\")\n\
         plt.ylabel(\"{ylabel}\")\n\
         plt.title(\"{}\")\n\
         plt.savefig(\"plot.png\", dpi=150)\n",
        command.name()
    )
}

const SAMPLES_PLOT: &str = "import csv\n\
import matplotlib.pyplot as plt\n\
\n\
with open(\"results.csv\") as f:\n\
\x20   xs = [float(r[\"sample\"]) for r in csv.DictReader(f)]\n\
plt.hist(xs, bins=100, density=True)\n\
plt.xlabel(\"mean\")\n\
plt.savefig(\"plot.png\", dpi=150)\n";

impl Outputs {
    pub fn grid(command: Command, grid: DistributionGrid) -> Self {
        Self { files: vec![(RESULTS_FILE, csv_grid(&grid)), (PLOT_FILE, grid_plot(command))], failed: None }
    }

    pub fn json(name: &'static str, value: Value) -> Self {
        Self { files: vec![(name, pretty(&value))], failed: None }
    }

    pub fn samples(xs: Vec<f64>) -> Self {
        let mut s = String::from("sample\n");
        for x in xs {
            let _ = writeln!(s, "{x:.16e}");
        }
        Self { files: vec![(RESULTS_FILE, s), (PLOT_FILE, SAMPLES_PLOT.to_string())], failed: None }
    }

    pub fn validation(reports: Vec<SuiteReport>) -> Self {
        let failing: Vec<String> = reports
            .iter()
            .flat_map(|r| r.checks.iter().filter(|c| !c.pass).map(move |c| format!("{}: {} (KS {:.4} > {})", r.suite, c.name, c.ks, c.threshold)))
            .collect();
        for r in &reports {
            for c in &r.checks {
                eprintln!("{} {}: {} KS = {:.5} (threshold {})", if c.pass { "PASS" } else { "FAIL" }, r.suite, c.name, c.ks, c.threshold);
            }
        }
        let pass = failing.is_empty();
        let failed = (!pass).then(|| format!("validation failed: {}", failing.join("; ")));
        let report = json!({ "pass": pass, "suites": reports });
        Self { files: vec![(REPORT_FILE, pretty(&report))], failed }
    }

    pub fn write(self, dir: &Path, cfg: &RunConfig, seconds: f64) -> Result<(), Failure> {
        let metadata = json!({
            "config": cfg,
            "versions": {
                "randmean": randmean::VERSION,
                "randmean-cli": env!("CARGO_PKG_VERSION"),
            },
            "timings": { "total_seconds": seconds },
        });
        let io = |e: std::io::Error| Failure { code: EXIT_NUMERICAL, message: format!("cannot write to {}: {e}", dir.display()) };
        std::fs::create_dir_all(dir).map_err(io)?;
        let meta = pretty(&metadata);
        for (name, body) in self.files.iter().map(|(n, b)| (*n, b.as_str())).chain([(METADATA_FILE, meta.as_str())]) {
            std::fs::write(dir.join(name), body).map_err(io)?;
        }
        match self.failed {
            Some(message) => Err(Failure { code: EXIT_NUMERICAL, message }),
            None => Ok(()),
        }
    }
}
