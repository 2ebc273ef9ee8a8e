use std::path::Path;
use std::process::Command;

const SCRIPT: &str = "import sys, highspy
h = highspy.Highs()
h.setOptionValue('output_flag', False)
h.setOptionValue('mip_rel_gap', 0.0)
h.readModel(sys.argv[1])
h.run()
print(h.modelStatusToString(h.getModelStatus()))
print(repr(h.getInfo().objective_function_value))
";

pub fn available() -> bool {
    Command::new("python3")
        .args(["-c", "import highspy"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Model status and objective reported by HiGHS for an MPS file.
pub fn solve(path: &Path) -> (String, f64) {
    let out = Command::new("python3").arg("-c").arg(SCRIPT).arg(path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let status = lines.next().unwrap().to_string();
    (status, lines.next().unwrap().trim().parse().unwrap())
}
