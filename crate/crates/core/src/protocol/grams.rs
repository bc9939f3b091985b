//! Target cosine-similarity matrices for the two command regimes.

use crate::embeddings::GramSpec;

/// Pairwise cosines of the six original commands in the word2vec space
/// (order: forward, backward, halt, stop, suspend, cease).
pub fn original_gram() -> GramSpec {
    let labels = ["forward", "backward", "halt", "stop", "suspend", "cease"]
        .map(String::from)
        .to_vec();
    let gram = vec![
        vec![1.00, 0.42, 0.15, 0.13, 0.11, 0.02],
        vec![0.42, 1.00, 0.17, 0.17, 0.09, -0.01],
        vec![0.15, 0.17, 1.00, 0.61, 0.63, 0.56],
        vec![0.13, 0.17, 0.61, 1.00, 0.38, 0.50],
        vec![0.11, 0.09, 0.63, 0.38, 1.00, 0.57],
        vec![0.02, -0.01, 0.56, 0.50, 0.57, 1.00],
    ];
    GramSpec::new(labels, gram).expect("builtin gram is valid")
}

/// Per-task-balanced command set (halt removed; `foward` and `backwards`
/// added). Pairs with measured values keep them; the synthetic additions use
/// within-task cosine 0.55 (similar to the stop synonyms), the
/// forward-backward analog 0.42 across movement tasks, and the move-stop
/// analog 0.13. Order: forward, foward, backward, backwards, stop, suspend,
/// cease.
pub fn balanced_gram() -> GramSpec {
    let labels = [
        "forward",
        "foward",
        "backward",
        "backwards",
        "stop",
        "suspend",
        "cease",
    ]
    .map(String::from)
    .to_vec();
    const WITHIN: f64 = 0.55;
    const MOVE_MOVE: f64 = 0.42;
    const MOVE_STOP: f64 = 0.13;
    let gram = vec![
        vec![1.00, WITHIN, 0.42, MOVE_MOVE, 0.13, 0.11, 0.02],
        vec![
            WITHIN, 1.00, MOVE_MOVE, MOVE_MOVE, MOVE_STOP, MOVE_STOP, MOVE_STOP,
        ],
        vec![0.42, MOVE_MOVE, 1.00, WITHIN, 0.17, 0.09, -0.01],
        vec![
            MOVE_MOVE, MOVE_MOVE, WITHIN, 1.00, MOVE_STOP, MOVE_STOP, MOVE_STOP,
        ],
        vec![0.13, MOVE_STOP, 0.17, MOVE_STOP, 1.00, 0.38, 0.50],
        vec![0.11, MOVE_STOP, 0.09, MOVE_STOP, 0.38, 1.00, 0.57],
        vec![0.02, MOVE_STOP, -0.01, MOVE_STOP, 0.50, 0.57, 1.00],
    ];
    GramSpec::new(labels, gram).expect("builtin gram is valid")
}
