//! Compresses morpheme tensors with an autoencoder trained on the unbinding
//! loss, after checking its gradients numerically.

use polylm::analyzer_weighting::AnalysisLexicon;
use polylm::autoencoder::{
    encode_all, gradient_check, train_autoencoder, Activation, AutoencoderParams, Dataset, Objective, TrainConfig,
};
use polylm::tpr::{MorphemeTprConfig, TprDictionary};

const LEXICON: &str = "\
ahata\ta<p1>+ha<v>+ta<fut>\ta>ha>ta
rehóta\tre<p2>+hó<v>+ta<fut>\tre>hó>ta
ohopa\to<p3>+ho<v>+pa<qst>\to>ho>pa
ajapo\ta<p1>+japo<v><tv>\ta>japo
";

fn main() -> polylm::Result<()> {
    let lex = AnalysisLexicon::read(std::io::Cursor::new(LEXICON))?;
    let dict = TprDictionary::from_lexicon(&lex, MorphemeTprConfig::default())?;
    let samples = dict.tensors()?;
    let roles = dict.spaces.role_refs();
    let data = Dataset { samples: &samples, fillers: &dict.spaces.fillers, roles: &roles };
    println!("{} morphemes, tensor shape {:?}", dict.len(), dict.shape);

    let probe = AutoencoderParams::init(&dict.shape, 3, Activation::Tanh, 1)?;
    let err = gradient_check(&probe, &data, Objective::default(), 1e-5)?;
    println!("gradient check: max relative error {err:.2e}");

    let cfg = TrainConfig { latent_dim: 6, epochs: 300, lr: 1.0, ..Default::default() };
    let trained = train_autoencoder(&data, &cfg)?;
    for (epoch, loss) in trained.trace.iter().enumerate().step_by(50) {
        println!("epoch {epoch:>3}  loss {loss:.4}");
    }
    println!("final      loss {:.4} (lr {:.3})", trained.trace.last().unwrap(), trained.lr);

    let ids: Vec<&str> = dict.entries.iter().map(|e| e.morpheme.as_str()).collect();
    for v in encode_all(&trained.params, ids.into_iter().zip(samples.iter().map(|(_, t)| t)))?.iter().take(3) {
        let z: Vec<String> = v.values.iter().map(|x| format!("{x:+.2}")).collect();
        println!("{:>14}  [{}]", v.id, z.join(" "));
    }
    Ok(())
}
