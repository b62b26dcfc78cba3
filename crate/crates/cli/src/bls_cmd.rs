use std::path::Path;

use beaconlab_core::batch::{
    additive_deviation_trials, forge_additive_deviation, honest_pair, subgroup_deviation_trials, BatchCoefficients,
    BatchDocument, BatchItem, BatchVerifier,
};
use beaconlab_core::bls::{BlsScheme, ProofOfPossession, SecretKey, Verdict};
use beaconlab_core::pairing::{Bls12Suite, PairingSuite, ToySuite};
use num_bigint::{BigUint, RandBigInt};
use rand::RngCore;
use serde_json::json;

use crate::{hex0x, parse_hex, runtime, AttackCmd, BlsCmd, CliError, Ctx, Finished, SuiteArg, Validity};

pub(crate) const ROGUE_KEY_MESSAGE: &[u8] = b"beaconlab rogue-key demo";

pub(crate) fn bls(ctx: &Ctx, cmd: &BlsCmd) -> Result<Finished, CliError> {
    match ctx.suite {
        SuiteArg::Toy => bls_with(ctx, &BlsScheme::new(ToySuite::monte_carlo()), cmd),
        SuiteArg::Bls12381 => bls_with(ctx, &BlsScheme::new(Bls12Suite::new()), cmd),
    }
}

pub(crate) fn attack(ctx: &Ctx, cmd: &AttackCmd) -> Result<Finished, CliError> {
    match ctx.suite {
        SuiteArg::Toy => attack_with(ctx, &BlsScheme::new(ToySuite::monte_carlo()), cmd, Some(5)),
        SuiteArg::Bls12381 => {
            let suite = Bls12Suite::new();
            let smallest = suite.g2_small_torsion_orders(1000).first().copied();
            attack_with(ctx, &BlsScheme::new(suite), cmd, smallest)
        }
    }
}

fn secret_key<S: PairingSuite>(scheme: &BlsScheme<S>, hex: &str) -> Result<SecretKey, CliError> {
    let bytes = parse_hex(hex, "sk")?;
    SecretKey::from_scalar(scheme.suite(), BigUint::from_bytes_be(&bytes)).map_err(|e| CliError::Usage(e.to_string()))
}

fn key_from_rng<S: PairingSuite>(scheme: &BlsScheme<S>, rng: &mut impl RngCore) -> SecretKey {
    let mut ikm = [0u8; 32];
    rng.fill_bytes(&mut ikm);
    scheme.keygen(&ikm, b"").expect("32-byte ikm")
}

fn bls_with<S: PairingSuite>(ctx: &Ctx, scheme: &BlsScheme<S>, cmd: &BlsCmd) -> Result<Finished, CliError> {
    match cmd {
        BlsCmd::Keygen { ikm, key_info } => {
            let ikm = match ikm {
                Some(h) => parse_hex(h, "ikm")?,
                None => {
                    let mut b = vec![0u8; 32];
                    ctx.rng().fill_bytes(&mut b);
                    b
                }
            };
            let sk = scheme
                .keygen(&ikm, key_info.as_bytes())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let pk = scheme.sk_to_pk(&sk);
            let pop = scheme.pop_prove(&sk);
            Ok(Finished::new(
                json!({ "ikm": hex0x(&ikm), "key_info": key_info }),
                json!({
                    "sk": hex0x(&sk.to_bytes_be()),
                    "pk": hex0x(&scheme.public_key_bytes(&pk)),
                    "pop": hex0x(&scheme.signature_bytes(&pop.0)),
                }),
                true,
                "key pair generated",
            ))
        }
        BlsCmd::Sign { sk, message } => {
            let key = secret_key(scheme, sk)?;
            let sig = scheme.sign(&key, message.as_bytes());
            Ok(Finished::new(
                json!({ "message": message }),
                json!({ "signature": hex0x(&scheme.signature_bytes(&sig)) }),
                true,
                "message signed",
            ))
        }
        BlsCmd::Verify {
            pk,
            message,
            signature,
            expect,
        } => {
            let pk_bytes = parse_hex(pk, "pk")?;
            let sig_bytes = parse_hex(signature, "signature")?;
            let verdict = match scheme.key_validate(&pk_bytes) {
                Ok(key) => scheme.core_verify(&key, message.as_bytes(), &sig_bytes),
                Err(e) => Verdict::Invalid(beaconlab_core::bls::InvalidReason::PublicKey(e)),
            };
            let want = *expect == Validity::Valid;
            Ok(Finished::new(
                json!({ "pk": hex0x(&pk_bytes), "message": message, "signature": hex0x(&sig_bytes) }),
                json!({ "verdict": verdict.to_string() }),
                verdict.is_valid() == want,
                verdict.to_string(),
            ))
        }
        BlsCmd::Aggregate { signatures } => {
            let sigs = signatures
                .iter()
                .map(|h| {
                    let b = parse_hex(h, "signature")?;
                    scheme.signature_from_bytes(&b).map_err(|e| CliError::Usage(e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let agg = scheme.aggregate(&sigs).map_err(runtime)?;
            Ok(Finished::new(
                json!({ "signatures": signatures.len() }),
                json!({ "aggregate": hex0x(&scheme.signature_bytes(&agg)) }),
                true,
                format!("{} signatures aggregated", sigs.len()),
            ))
        }
        BlsCmd::BatchVerify { file, items, coeff_bits } => batch_verify(ctx, scheme, file.as_deref(), *items, *coeff_bits),
    }
}

fn batch_verify<S: PairingSuite>(
    ctx: &Ctx,
    scheme: &BlsScheme<S>,
    file: Option<&Path>,
    n: usize,
    coeff_bits: u32,
) -> Result<Finished, CliError> {
    let suite = scheme.suite();
    let (items, coeff_seed, bits, enforce, source) = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(runtime)?;
            let doc: BatchDocument = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("batch file: {e}")))?;
            let items = doc.to_items(suite).map_err(|e| CliError::Usage(e.to_string()))?;
            let seed = doc.seed_bytes().map_err(|e| CliError::Usage(e.to_string()))?;
            (items, seed, doc.coeff_bits, doc.enforce_subgroup, path.display().to_string())
        }
        None => {
            if n == 0 {
                return Err(CliError::Usage("--items must be positive".into()));
            }
            let mut rng = ctx.rng();
            let items: Vec<BatchItem<S>> = (0..n)
                .map(|i| {
                    let sk = key_from_rng(scheme, &mut rng);
                    let msg = format!("batch message {i}").into_bytes();
                    BatchItem {
                        signature: scheme.sign(&sk, &msg),
                        pairs: vec![(scheme.sk_to_pk(&sk), msg)],
                    }
                })
                .collect();
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            (items, seed, coeff_bits, true, "generated".to_string())
        }
    };
    let verifier = BatchVerifier::new(suite.clone());
    let naive = verifier.naive_verify(&items).map_err(runtime)?;
    let naive_pairings = verifier.pairings();
    verifier.reset_counter();
    let coeffs = BatchCoefficients::generate(items.len(), bits, coeff_seed, suite.order()).map_err(|e| CliError::Usage(e.to_string()))?;
    let batch = verifier.batch_verify(&items, &coeffs, enforce).map_err(runtime)?;
    let batch_pairings = verifier.pairings();
    Ok(Finished::new(
        json!({
            "source": source,
            "items": items.len(),
            "coeff_bits": bits,
            "coeff_seed": hex0x(&coeff_seed),
            "enforce_subgroup": enforce,
        }),
        json!({
            "batch_valid": batch,
            "naive_valid": naive,
            "batch_pairings": batch_pairings,
            "naive_pairings": naive_pairings,
            "pairings_saved": naive_pairings as i64 - batch_pairings as i64,
        }),
        batch == naive,
        format!("batch {} / naive {}", verdict_word(batch), verdict_word(naive)),
    ))
}

fn verdict_word(ok: bool) -> &'static str {
    if ok {
        "VALID"
    } else {
        "INVALID"
    }
}

fn attack_with<S: PairingSuite>(
    ctx: &Ctx,
    scheme: &BlsScheme<S>,
    cmd: &AttackCmd,
    default_torsion: Option<u64>,
) -> Result<Finished, CliError> {
    match cmd {
        AttackCmd::RogueKey => rogue_key(ctx, scheme),
        AttackCmd::BatchDeviation { trials, coeff_bits } => batch_deviation(ctx, scheme, *trials, *coeff_bits),
        AttackCmd::BatchSubgroup {
            trials,
            torsion_order,
            coeff_bits,
        } => {
            let p = torsion_order
                .or(default_torsion)
                .ok_or_else(|| CliError::Usage("no small torsion order available; pass --torsion-order".into()))?;
            let trials = trials.unwrap_or(match ctx.suite {
                SuiteArg::Toy => 10_000,
                SuiteArg::Bls12381 => 500,
            });
            batch_subgroup(ctx, scheme, trials, p, *coeff_bits)
        }
        AttackCmd::ReplayStaticSig { .. } => unreachable!("dispatched to the network commands"),
    }
}

fn rogue_key<S: PairingSuite>(ctx: &Ctx, scheme: &BlsScheme<S>) -> Result<Finished, CliError> {
    let mut rng = ctx.rng();
    let victim = key_from_rng(scheme, &mut rng);
    let victim_pk = scheme.sk_to_pk(&victim);
    let order = scheme.suite().order().clone();
    let forgery = loop {
        let rho = rng.gen_biguint_range(&BigUint::from(1u8), &order);
        // a rho whose rogue key is the identity is simply redrawn
        if let Ok(f) = scheme.rogue_key_forge(&victim_pk, ROGUE_KEY_MESSAGE, &rho) {
            break f;
        }
    };
    let pks = [victim_pk.clone(), forgery.rogue_pk.clone()];
    let sig = &forgery.forged_aggregate;
    let unsafe_verdict = scheme
        .unsafe_fast_aggregate_verify(&pks, ROGUE_KEY_MESSAGE, sig)
        .map_err(runtime)?;
    // The attacker holds no secret for the rogue key, so the best available
    // proofs are the victim's own and the forged aggregate.
    let victim_pop = scheme.pop_prove(&victim);
    let reused = scheme
        .fast_aggregate_verify(&pks, &[victim_pop.clone(), victim_pop.clone()], ROGUE_KEY_MESSAGE, sig)
        .map_err(runtime)?;
    let forged_pop = scheme
        .fast_aggregate_verify(&pks, &[victim_pop, ProofOfPossession(sig.clone())], ROGUE_KEY_MESSAGE, sig)
        .map_err(runtime)?;
    let expected = unsafe_verdict.is_valid() && !reused.is_valid() && !forged_pop.is_valid();
    Ok(Finished::new(
        json!({ "message": String::from_utf8_lossy(ROGUE_KEY_MESSAGE) }),
        json!({
            "victim_pk": hex0x(&scheme.public_key_bytes(&victim_pk)),
            "rogue_pk": hex0x(&scheme.public_key_bytes(&forgery.rogue_pk)),
            "forged_aggregate": hex0x(&scheme.signature_bytes(sig)),
            "vulnerable": {
                "verifier": "fast-aggregate-verify without proofs of possession",
                "verdict": unsafe_verdict.to_string(),
            },
            "mitigated": {
                "verifier": "fast-aggregate-verify with proofs of possession",
                "verdict_reused_victim_pop": reused.to_string(),
                "verdict_forged_aggregate_as_pop": forged_pop.to_string(),
            },
        }),
        expected,
        format!("unsafe verify {unsafe_verdict}, PoP verify {reused}"),
    )
    .finding("rogue-key-aggregation"))
}

fn batch_deviation<S: PairingSuite>(ctx: &Ctx, scheme: &BlsScheme<S>, trials: u64, bits: u32) -> Result<Finished, CliError> {
    let suite = scheme.suite();
    let honest = honest_pair(scheme, ctx.seed);
    let deviation = suite.g2_mul(&suite.g2_generator(), &BigUint::from(0x5eedu32));
    let tampered = forge_additive_deviation(suite, &honest, &deviation).map_err(runtime)?;
    let verifier = BatchVerifier::new(suite.clone());
    let naive = verifier.naive_verify(&tampered).map_err(runtime)?;
    let naive_pairings = verifier.pairings();
    verifier.reset_counter();
    let unit = verifier
        .batch_verify(&tampered, &BatchCoefficients::unit(2), true)
        .map_err(runtime)?;
    let batch_pairings = verifier.pairings();
    let summary = additive_deviation_trials(scheme, trials, bits, ctx.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    // coefficients are uniform in [1, B); the forgery survives iff r1 == r2
    let bound = (BigUint::from(1u8) << bits).min(suite.order().clone());
    let span = bound.to_string().parse::<f64>().unwrap_or(f64::INFINITY) - 1.0;
    let mean = trials as f64 / span;
    let allowed = (mean + 5.0 * mean.sqrt()).floor() as u64;
    let expected = unit && !naive && summary.passes <= allowed;
    Ok(Finished::new(
        json!({ "trials": trials, "coeff_bits": bits, "items": 2 }),
        json!({
            "naive_valid": naive,
            "naive_pairings": naive_pairings,
            "batch_pairings": batch_pairings,
            "pairings_saved": naive_pairings as i64 - batch_pairings as i64,
            "vulnerable": { "coefficients": "all ones", "batch_valid": unit },
            "mitigated": {
                "coefficients": format!("random {bits}-bit"),
                "passes": summary.passes,
                "trials": summary.trials,
                "pass_rate": summary.rate(),
                "max_expected_passes": allowed,
            },
        }),
        expected,
        format!(
            "unit coefficients {}, random coefficients {}/{} passes",
            verdict_word(unit),
            summary.passes,
            summary.trials
        ),
    )
    .finding("batch-additive-deviation"))
}

fn batch_subgroup<S: PairingSuite>(
    ctx: &Ctx,
    scheme: &BlsScheme<S>,
    trials: u64,
    p: u64,
    bits: u32,
) -> Result<Finished, CliError> {
    if trials == 0 || p < 2 {
        return Err(CliError::Usage("need at least one trial and a torsion order of at least 2".into()));
    }
    let open = subgroup_deviation_trials(scheme, p, trials, bits, false, ctx.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let checked = subgroup_deviation_trials(scheme, p, trials, bits, true, ctx.seed).map_err(runtime)?;
    let q = 1.0 / p as f64;
    let sigma = (q * (1.0 - q) / trials as f64).sqrt();
    let (lo, hi) = (q - 3.0 * sigma, q + 3.0 * sigma);
    let rate = open.rate();
    let expected = (lo..=hi).contains(&rate) && checked.passes == 0;
    Ok(Finished::new(
        json!({ "trials": trials, "torsion_order": p, "coeff_bits": bits }),
        json!({
            "predicted_rate": q,
            "band": [lo, hi],
            "vulnerable": { "subgroup_checks": false, "passes": open.passes, "pass_rate": rate },
            "mitigated": { "subgroup_checks": true, "passes": checked.passes, "pass_rate": checked.rate() },
        }),
        expected,
        format!("unchecked pass rate {rate:.4} (1/{p} = {q:.4}), checked {} passes", checked.passes),
    )
    .finding("batch-small-subgroup"))
}
