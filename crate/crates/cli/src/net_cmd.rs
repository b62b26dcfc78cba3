use std::path::Path;

use beaconlab_core::discv5::{size_field_tampering, Discv5Error, RejectReason, Variant};
use beaconlab_core::link::{Direction, Phase, Transcript};
use beaconlab_core::noise::{staged_replay, AttackOutcome, BindingMode};
use beaconlab_core::simnet::{
    measure_amplification, noise_amplification_suite, passive_decrypt_probe, AdversaryScript, CompromiseSet,
    CompromisedKey, Protocol, SessionConfig, SessionReport, SimNetwork,
};
use serde_json::{json, Value};

use crate::{hex0x, runtime, CliError, Ctx, Finished, SessionArgs};

fn mode_name(mode: BindingMode) -> &'static str {
    match mode {
        BindingMode::Legacy => "legacy",
        BindingMode::Hardened => "hardened",
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::V5 => "v5",
        Variant::Kk => "kk",
    }
}

fn write_transcript(path: Option<&Path>, t: &Transcript) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, t.to_json()).map_err(runtime),
        None => Ok(()),
    }
}

fn outcome_text(o: &AttackOutcome) -> String {
    match o {
        AttackOutcome::Impersonated { identity } => format!("impersonated {}", hex0x(identity)),
        AttackOutcome::Rejected(e) => format!("rejected: {e}"),
    }
}

pub(crate) fn replay_static_sig(ctx: &Ctx, transcript_out: Option<&Path>) -> Result<Finished, CliError> {
    let legacy = staged_replay(ctx.seed, BindingMode::Legacy, false);
    let hardened = staged_replay(ctx.seed, BindingMode::Hardened, false);
    write_transcript(transcript_out, &legacy.attack)?;
    let expected = matches!(legacy.outcome, AttackOutcome::Impersonated { identity } if identity == legacy.victim_identity)
        && !hardened.outcome.is_impersonated();
    Ok(Finished::new(
        json!({ "recorded_session": "noise-xx legacy" }),
        json!({
            "victim_identity": hex0x(&legacy.victim_identity),
            "recorded_packets": legacy.recorded.len(),
            "vulnerable": {
                "mode": "legacy",
                "outcome": outcome_text(&legacy.outcome),
                "attack_packets": legacy.attack.len(),
            },
            "mitigated": {
                "mode": "hardened",
                "outcome": outcome_text(&hardened.outcome),
                "attack_packets": hardened.attack.len(),
            },
        }),
        expected,
        format!(
            "legacy: {}, hardened: {}",
            if legacy.outcome.is_impersonated() { "Impersonated" } else { "Rejected" },
            if hardened.outcome.is_impersonated() { "Impersonated" } else { "Rejected" }
        ),
    )
    .finding("noise-static-key-signature-replay"))
}

fn load_script(path: Option<&Path>) -> Result<AdversaryScript, CliError> {
    match path {
        None => Ok(AdversaryScript::honest()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(runtime)?;
            AdversaryScript::from_json(&text).map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn run_session(ctx: &Ctx, protocol: Protocol, cfg: &SessionConfig, script: &AdversaryScript) -> Result<SessionReport, CliError> {
    SimNetwork::new(ctx.seed)
        .run_session(protocol, cfg, script)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn packets(t: &Transcript) -> Value {
    Value::Array(
        t.entries
            .iter()
            .map(|e| {
                json!({
                    "label": e.label,
                    "direction": match e.direction {
                        Direction::InitiatorToResponder => "i->r",
                        Direction::ResponderToInitiator => "r->i",
                    },
                    "phase": match e.phase {
                        Phase::Handshake => "handshake",
                        Phase::Transport => "transport",
                    },
                    "bytes": e.bytes.len(),
                    "injected": e.injected,
                })
            })
            .collect(),
    )
}

fn session_metrics(s: &SessionReport) -> Value {
    json!({
        "completed": s.completed(),
        "initiator": s.initiator,
        "responder": s.responder,
        "ticks": s.ticks,
        "packets": packets(&s.transcript),
    })
}

pub(crate) fn noise_handshake(ctx: &Ctx, mode: BindingMode, args: &SessionArgs) -> Result<Finished, CliError> {
    let script = load_script(args.script.as_deref())?;
    let cfg = SessionConfig {
        binding_mode: mode,
        initiator_messages: args.messages,
        responder_messages: args.messages,
        ..SessionConfig::default()
    };
    let s = run_session(ctx, Protocol::NoiseXx, &cfg, &script)?;
    write_transcript(args.transcript_out.as_deref(), &s.transcript)?;
    let scripted = args.script.is_some();
    Ok(Finished::new(
        json!({ "mode": mode_name(mode), "messages": args.messages, "scripted": scripted }),
        session_metrics(&s),
        scripted || s.completed(),
        if s.completed() { "handshake completed" } else { "handshake did not complete" },
    ))
}

fn tamper_result(r: &Result<(), Discv5Error>) -> String {
    match r {
        Ok(()) => "completed".into(),
        Err(e) => e.to_string(),
    }
}

pub(crate) fn discv5_handshake(
    ctx: &Ctx,
    variant: Variant,
    binding: bool,
    tamper: bool,
    args: &SessionArgs,
) -> Result<Finished, CliError> {
    if tamper {
        let (open_run, open) = size_field_tampering(ctx.seed, variant, false);
        let (bound_run, bound) = size_field_tampering(ctx.seed, variant, true);
        write_transcript(args.transcript_out.as_deref(), &open_run.transcript)?;
        let keys_agree = open.is_ok() && open_run.initiator.session_keys() == open_run.responder.session_keys();
        let expected = keys_agree && bound == Err(Discv5Error::HandshakeRejected(RejectReason::Transcript));
        return Ok(Finished::new(
            json!({ "variant": variant_name(variant), "tamper": "ephemeral key padded, size field adjusted" }),
            json!({
                "vulnerable": {
                    "transcript_binding": false,
                    "result": tamper_result(&open),
                    "session_keys_agree": keys_agree,
                    "packets": packets(&open_run.transcript),
                },
                "mitigated": {
                    "transcript_binding": true,
                    "result": tamper_result(&bound),
                    "packets": packets(&bound_run.transcript),
                },
            }),
            expected,
            format!("without binding: {}, with binding: {}", tamper_result(&open), tamper_result(&bound)),
        )
        .finding("discv5-unbound-size-fields"));
    }
    let script = load_script(args.script.as_deref())?;
    let protocol = match variant {
        Variant::V5 => Protocol::Discv5V5,
        Variant::Kk => Protocol::Discv5Kk,
    };
    let cfg = SessionConfig {
        transcript_binding: binding,
        initiator_messages: args.messages,
        responder_messages: args.messages,
        ..SessionConfig::default()
    };
    let s = run_session(ctx, protocol, &cfg, &script)?;
    write_transcript(args.transcript_out.as_deref(), &s.transcript)?;
    let scripted = args.script.is_some();
    Ok(Finished::new(
        json!({
            "variant": variant_name(variant),
            "transcript_binding": binding,
            "messages": args.messages,
            "scripted": scripted,
        }),
        session_metrics(&s),
        scripted || s.completed(),
        if s.completed() { "handshake completed" } else { "handshake did not complete" },
    ))
}

fn parse_compromise(s: &str) -> Result<Vec<CompromisedKey>, CliError> {
    match s.trim() {
        "none" | "" => Ok(Vec::new()),
        "all" => Ok(vec![
            CompromisedKey::InitiatorStatic,
            CompromisedKey::ResponderStatic,
            CompromisedKey::InitiatorEphemeral,
            CompromisedKey::ResponderEphemeral,
        ]),
        list => {
            let mut keys = list
                .split(',')
                .map(|k| k.trim().parse::<CompromisedKey>().map_err(CliError::Usage))
                .collect::<Result<Vec<_>, _>>()?;
            keys.sort_by_key(|k| *k as u8);
            keys.dedup();
            Ok(keys)
        }
    }
}

fn key_name(k: CompromisedKey) -> &'static str {
    match k {
        CompromisedKey::InitiatorStatic => "initiator-static",
        CompromisedKey::ResponderStatic => "responder-static",
        CompromisedKey::InitiatorEphemeral => "initiator-ephemeral",
        CompromisedKey::ResponderEphemeral => "responder-ephemeral",
    }
}

pub(crate) fn forward_secrecy(
    ctx: &Ctx,
    protocol: Protocol,
    compromise: &str,
    messages: usize,
    recorded_from: usize,
) -> Result<Finished, CliError> {
    let keys = parse_compromise(compromise)?;
    let cfg = SessionConfig {
        initiator_messages: messages,
        responder_messages: messages,
        ..SessionConfig::default()
    };
    let s = run_session(ctx, protocol, &cfg, &AdversaryScript::honest())?;
    let mut set = CompromiseSet::select(&s.secrets, &keys);
    set.recorded_from = recorded_from;
    let probe = passive_decrypt_probe(&s.transcript, &set);
    let counts = |d, p| {
        let (dec, total) = probe.count(d, p);
        json!({ "decrypted": dec, "encrypted": total })
    };
    let (i_dec, i_total) = probe.count(Direction::InitiatorToResponder, Phase::Transport);
    let (dec, total) = probe.decrypted_total();
    let only_responder_static = keys == [CompromisedKey::ResponderStatic] && recorded_from == 0;
    let (prediction, holds) = if keys.is_empty() {
        ("nothing decrypts", dec == 0)
    } else if only_responder_static && protocol == Protocol::Discv5V5 {
        ("all initiator transport decrypts", i_total > 0 && i_dec == i_total)
    } else if only_responder_static && protocol == Protocol::Discv5Kk {
        ("no initiator transport decrypts", i_dec == 0)
    } else {
        ("none", true)
    };
    Ok(Finished::new(
        json!({
            "protocol": protocol.to_string(),
            "compromise": keys.iter().map(|k| key_name(*k)).collect::<Vec<_>>(),
            "messages": messages,
            "recorded_from": recorded_from,
        }),
        json!({
            "session_completed": s.completed(),
            "initiator_handshake": counts(Direction::InitiatorToResponder, Phase::Handshake),
            "responder_handshake": counts(Direction::ResponderToInitiator, Phase::Handshake),
            "initiator_transport": counts(Direction::InitiatorToResponder, Phase::Transport),
            "responder_transport": counts(Direction::ResponderToInitiator, Phase::Transport),
            "total": { "decrypted": dec, "encrypted": total },
            "prediction": prediction,
        }),
        s.completed() && holds,
        format!("{dec}/{total} encrypted packets decrypt; initiator transport {i_dec}/{i_total}"),
    )
    .finding("forward-secrecy-under-static-key-compromise"))
}

pub(crate) fn amplification(ctx: &Ctx, protocol: Protocol) -> Result<Finished, CliError> {
    match protocol {
        Protocol::NoiseXx => {
            let a = noise_amplification_suite(ctx.seed);
            let c = a.configured;
            let expected = c.initiator_bytes == 32 && c.responder_bytes == 192 && c.factor == 6.0;
            Ok(Finished::new(
                json!({ "protocol": protocol.to_string() }),
                serde_json::to_value(a).map_err(runtime)?,
                expected,
                format!(
                    "message 1 = {} bytes, message 2 = {} bytes, factor {:.1}",
                    c.initiator_bytes, c.responder_bytes, c.factor
                ),
            )
            .finding("handshake-amplification"))
        }
        Protocol::Discv5V5 | Protocol::Discv5Kk => {
            let s = run_session(ctx, protocol, &SessionConfig::default(), &AdversaryScript::honest())?;
            let a = measure_amplification(&s.transcript, 0).map_err(runtime)?;
            Ok(Finished::new(
                json!({ "protocol": protocol.to_string() }),
                json!({ "measured": a }),
                true,
                format!(
                    "request {} bytes, challenge {} bytes, factor {:.3}",
                    a.initiator_bytes, a.responder_bytes, a.factor
                ),
            )
            .finding("handshake-amplification"))
        }
    }
}
