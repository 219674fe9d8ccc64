//! The published four-gene, two-time estimate used as a stored fixture.

use gldelta::evaluation::{evolution_diagnostics, graph_diff, Panel};
use gldelta::io::load_matrix;
use gldelta::{BlockKind, BlockLayout, PenaltyConfig, PrecisionEstimate};

const GENES: [&str; 4] = ["ZNF", "CCN", "SIV", "SCY"];

fn fixture() -> PrecisionEstimate {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/table1_theta.txt");
    let theta = load_matrix(path).unwrap();
    let layout = BlockLayout::new(4, 2, 1).unwrap();
    let config = PenaltyConfig::new(&layout, 0.01, 0.1).unwrap();
    PrecisionEstimate::from_parts(theta, layout, config, 1e-4).unwrap()
}

fn pair(i: usize, j: usize) -> (&'static str, &'static str) {
    (GENES[i], GENES[j])
}

#[test]
fn born_and_died_edges() {
    let r = graph_diff(&fixture(), 0).unwrap();
    let born: Vec<_> = r.born.iter().map(|e| pair(e.gene_i, e.gene_j)).collect();
    let died: Vec<_> = r.died.iter().map(|e| pair(e.gene_i, e.gene_j)).collect();
    let kept: Vec<_> = r.intersection.iter().map(|e| pair(e.gene_i, e.gene_j)).collect();
    assert_eq!(born, vec![("ZNF", "CCN")]);
    assert_eq!(died, vec![("ZNF", "SIV")]);
    assert_eq!(kept, vec![("ZNF", "SCY"), ("CCN", "SCY")]);
    assert_eq!(r.born[0].after, -0.02);
    assert_eq!(r.died[0].before, -0.26);
    assert!(graph_diff(&fixture(), 1).is_err());
}

#[test]
fn dot_panels_name_genes() {
    let r = graph_diff(&fixture(), 0).unwrap();
    let names: Vec<String> = GENES.iter().map(|s| s.to_string()).collect();
    let dot = r.to_dot(Panel::Difference, &names);
    assert!(dot.contains("\"ZNF\" -- \"CCN\" [weight=-0.02, style=solid];"));
    assert!(dot.contains("\"ZNF\" -- \"SIV\" [weight=-0.26, style=dashed];"));
}

#[test]
fn strongest_cross_time_entry_is_lag_one() {
    // 0.41 links SCY at time 1 with SIV at time 2
    let est = fixture();
    let b = est.layout().classify(3, 6);
    assert_eq!((b.kind, b.lag, b.time, b.gene_i, b.gene_j), (BlockKind::Network, 1, 0, 3, 2));
    assert_eq!(est.theta()[(3, 6)], 0.41);
}

#[test]
fn per_time_statistics() {
    let stats = evolution_diagnostics(&fixture());
    let edges: Vec<usize> = stats.iter().map(|s| s.edges).collect();
    assert_eq!(edges, vec![3, 3]);
    // time 1: ZNF–SIV, ZNF–SCY, CCN–SCY join all four genes
    assert_eq!((stats[0].components, stats[0].largest_component), (1, 4));
    // time 2: ZNF–CCN, ZNF–SCY, CCN–SCY leave SIV alone
    assert_eq!((stats[1].components, stats[1].largest_component), (2, 3));
}
