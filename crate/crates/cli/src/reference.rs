//! Published scores bundled with the binary, used only to report deltas.

use serde::Deserialize;

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Score {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MethodScores {
    pub random: Option<Score>,
    pub label_propagation: Option<Score>,
    pub snore: Option<Score>,
    pub snore_sdf: Option<Score>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub display: String,
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub classes: usize,
    pub micro_f1: MethodScores,
    pub macro_f1: MethodScores,
}

#[derive(Debug, Deserialize)]
struct Reference {
    datasets: Vec<Dataset>,
}

fn all() -> Vec<Dataset> {
    let r: Reference = serde_json::from_str(include_str!("../reference.json")).expect("bundled reference parses");
    r.datasets
}

pub fn names() -> Vec<String> {
    all().into_iter().map(|d| d.name).collect()
}

/// Case-insensitive lookup; spaces and underscores match dashes.
pub fn lookup(name: &str) -> Option<Dataset> {
    let key = name.to_ascii_lowercase().replace([' ', '_'], "-");
    all().into_iter().find(|d| d.name == key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_is_complete() {
        assert_eq!(names().len(), 11);
        let cora = lookup("Cora").unwrap();
        assert_eq!((cora.nodes, cora.edges, cora.components, cora.classes), (2708, 5278, 78, 7));
        assert_eq!(cora.micro_f1.snore.unwrap().mean, 0.822);
        assert_eq!(cora.macro_f1.label_propagation.unwrap().mean, 0.825);
        assert_eq!(lookup("coauthor_phy").unwrap().nodes, 34493);
        assert!(lookup("karate").is_none());
    }
}
