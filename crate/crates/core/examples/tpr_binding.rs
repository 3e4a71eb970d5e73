//! Binding and unbinding with tensor product representations: exact
//! recovery with orthonormal roles, crosstalk with overlapping ones, and a
//! two-level morpheme structure.

use polylm::analyzer_weighting::Morpheme;
use polylm::tpr::{
    bind, make_role_space, morpheme_structure, morpheme_tpr, nearest_filler, unbind, unbind_path, unbinding_loss,
    FillerVocab, LossConfig, MorphemeSpaces, MorphemeTprConfig, RoleScheme, RoleSpace,
};

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:+.3}")).collect::<Vec<_>>().join(" ")
}

fn main() -> polylm::Result<()> {
    let fillers = FillerVocab::dense(&["ha", "ta", "pa"], 4, 7)?;
    let bindings = [("ha", "root"), ("ta", "suffix")];

    let ortho = make_role_space(&["root", "suffix"], 2, RoleScheme::Orthonormal, Some(1))?;
    let t = bind(&bindings, &fillers, &ortho)?;
    println!("orthonormal roles, tensor shape {:?}", t.shape());
    for (f, r) in bindings {
        let u = unbind(&t, r, 0, &ortho)?;
        let (best, sim) = nearest_filler(u.data(), &fillers)?;
        println!("  {r:>6}: {} -> {best} (cos {sim:.6}), gold {f}", fmt(u.data()));
    }

    let skewed = RoleSpace::from_vectors(&["root", "suffix"], vec![vec![1.0, 0.0], vec![0.6, 0.8]])?;
    let t = bind(&bindings, &fillers, &skewed)?;
    println!("roles with overlap 0.6");
    for (f, r) in bindings {
        let u = unbind(&t, r, 0, &skewed)?;
        let (best, sim) = nearest_filler(u.data(), &fillers)?;
        println!("  {r:>6}: {} -> {best} (cos {sim:.6}), gold {f}", fmt(u.data()));
    }

    let cfg = MorphemeTprConfig { char_level: true, ..Default::default() };
    let morphemes: Vec<Morpheme> = ["hó<v><iv>", "ta<fut>", "pa<qst>"]
        .iter()
        .map(|m| Morpheme::parse(m))
        .collect::<polylm::Result<_>>()?;
    let spaces = MorphemeSpaces::build(&morphemes, cfg.clone())?;
    let m = &morphemes[0];
    let t = morpheme_tpr(m, &spaces)?;
    let gold = morpheme_structure(m, &cfg)?;
    println!("morpheme {} -> shape {:?}", m.key(), t.shape());
    let per_leaf = unbinding_loss(&t, &gold, &spaces.fillers, &spaces.role_refs(), LossConfig::default())?
        / gold.leaves().len() as f64;
    println!("  per-leaf unbinding loss of the exact tensor: {per_leaf:.6}");
    for leaf in gold.leaves().iter().take(4) {
        let v = unbind_path(&t, &leaf.path, &spaces.role_refs())?;
        let (best, _) = nearest_filler(&v, &spaces.fillers)?;
        println!("  {:?} -> {best}", leaf.path);
    }
    Ok(())
}
