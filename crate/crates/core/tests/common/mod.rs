#![allow(dead_code)]

use std::path::PathBuf;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Cells of the three-column operation table in the reference notes, with
/// `~` padding and surrounding whitespace removed.
pub fn reference_operation_rows() -> Vec<[String; 3]> {
    let text = std::fs::read_to_string(workspace_root().join("paper.md")).expect("reference notes");
    let label = text.find("\\label{tab:operations}").expect("table label");
    let start = text[..label].rfind("\\begin{tabular}{ccc}").expect("table start");
    let body = &text[start..];
    let end = body.find("\\end{tabular}").unwrap();
    body[..end]
        .lines()
        .filter(|l| l.contains('&') && l.trim_end().ends_with("\\\\"))
        .map(|l| {
            let l = l.trim_end().trim_end_matches("\\\\");
            let cells: Vec<String> = l.split('&').map(|c| c.replace('~', "").trim().to_string()).collect();
            [cells[0].clone(), cells[1].clone(), cells[2].clone()]
        })
        .skip(1)
        .collect()
}
