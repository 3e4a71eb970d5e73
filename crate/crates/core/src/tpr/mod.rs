//! Tensor product representations.
//!
//! A structure is a set of filler/role bindings; its representation is
//! `T = Σ f_i ⊗ r_j`. Unbinding contracts `T` with a role vector and recovers
//! the filler exactly when roles are orthonormal. With non-orthogonal unit
//! roles the result picks up the other fillers in proportion to the role
//! overlaps:
//!
//! ```text
//! unbind(T, r_i) = f_i + Σ_{j≠i} <r_j, r_i> f_j
//! ```
//!
//! Nested structures bind a whole subtree tensor to an outer role, adding
//! one axis per level. Morphemes are encoded as feature/value structures
//! (optionally with their characters bound to position roles one level
//! down), and the unbinding loss scores a predicted tensor by how well every
//! gold role path unbinds to its gold filler.

mod loss;
mod morpheme;
mod space;
mod tensor;

pub use loss::{
    nearest_filler, similarity_vector, unbinding_log_probs, unbinding_loss, unbinding_loss_grad,
    LossConfig, NORM_EPS,
};
pub use morpheme::{
    morpheme_features, morpheme_structure, morpheme_tpr, DictionaryEntry, MorphemeSpaces,
    MorphemeTprConfig, TprDictionary, CHAR_PREFIX, FORM_ROLE, LEMMA_ROLE, POSITION_SLACK, VALUE_ROLE,
};
pub use space::{
    make_role_space, min_gram_eigenvalue, FillerScheme, FillerVocab, RoleScheme, RoleSpace,
    MIN_GRAM_EIGENVALUE,
};
pub use tensor::{bind, bind_hierarchical, unbind, unbind_path, Binding, Structure, TprTensor};
