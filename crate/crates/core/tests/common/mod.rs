use std::path::PathBuf;

use whopt::problem::ProblemSpec;

pub fn problem(name: &str) -> ProblemSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    ProblemSpec::from_json_str(&text).unwrap()
}
