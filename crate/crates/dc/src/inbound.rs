//! Turning frames from the control centre into queue items.

use dcage_protocol::{decode, Body, DecodeError, WireMessage};

use crate::runtime::Inbound;

/// Decoded message to queue item. Only commands are expected from the CCC.
pub fn handle_ccc_message(msg: WireMessage) -> Inbound {
    match msg.body {
        Body::Command(command) => Inbound::Command { seq: Some(msg.seq), command },
        other => Inbound::ProtocolError {
            reason: format!("unexpected message type {}", other.kind()),
            ref_seq: Some(msg.seq),
        },
    }
}

/// Raw frame to queue item. Ill-typed commands are answered with a rejected
/// Ack, anything else that fails to decode with a protocol error.
pub fn handle_ccc_frame(bytes: &[u8]) -> Inbound {
    match decode(bytes) {
        Ok(msg) => handle_ccc_message(msg),
        Err(DecodeError::BadPayload { kind, seq, reason, .. }) if kind == "Command" => Inbound::Reject {
            ref_seq: seq,
            reason: format!("ill-typed command: {reason}"),
        },
        Err(e @ (DecodeError::UnknownType { seq, .. } | DecodeError::BadPayload { seq, .. })) => {
            Inbound::ProtocolError { reason: e.to_string(), ref_seq: Some(seq) }
        }
        Err(e @ DecodeError::Malformed(_)) => Inbound::ProtocolError { reason: e.to_string(), ref_seq: None },
    }
}
