//! Sparse symbolic node embeddings.
//!
//! Each node is described by the frequency profile of short random walks
//! started from it (its *hash*). The most central nodes by PageRank become
//! features, and a node's value for a feature is the similarity of the two
//! hashes. Every column of the embedding is therefore a readable statement:
//! "how much does this node's neighbourhood resemble that node's".
//!
//! ```
//! use snore::{embed, EmbeddingConfig, Graph};
//!
//! let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], false)?;
//! let e = embed(&g, &EmbeddingConfig::fixed(2))?;
//! assert_eq!((e.num_rows(), e.num_cols()), (4, 2));
//! # Ok::<(), snore::Error>(())
//! ```

pub mod embed;
mod error;
pub mod eval;
pub mod graph;
pub mod hash;
pub mod rank;
pub mod rng;
pub mod similarity;
pub mod walk;

pub use embed::{
    digitize, embed, embed_from_hashes, load_embedding, save_embedding, snore_fixed, snore_sdf, Embedding,
    EmbeddingConfig, EmbeddingMode,
};
pub use error::{Error, Result};
pub use graph::{load_edge_list, load_labels, Graph, GraphBuilder, LabelTable, NodeId};
pub use hash::{hash_all, hash_node, HashVector};
pub use rank::{pagerank, rank_nodes, PageRank, PageRankConfig, Ranking};
pub use similarity::{similarity, Metric};
pub use walk::{LengthDistribution, WalkConfig};

// The guide's code blocks run as doctests of these empty modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/hashes.md")]
    mod hashes {}
    #[doc = include_str!("../../../book/src/pivots.md")]
    mod pivots {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/budget.md")]
    mod budget {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
