use std::fmt;
use std::str::FromStr;

use bytes::Bytes;
use serde::{Deserialize, Serialize};

/// Collision-detection model of the shared channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    StrongCD,
    SenderCD,
    ReceiverCD,
    NoCD,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::StrongCD,
        ModelKind::SenderCD,
        ModelKind::ReceiverCD,
        ModelKind::NoCD,
    ];

    /// Listeners can tell a collision apart from silence.
    pub fn listener_detects_noise(self) -> bool {
        matches!(self, ModelKind::StrongCD | ModelKind::ReceiverCD)
    }

    /// Transmitters receive feedback from the channel.
    pub fn sender_feedback(self) -> bool {
        matches!(self, ModelKind::StrongCD | ModelKind::SenderCD)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            ModelKind::StrongCD => "strong-cd",
            ModelKind::SenderCD => "sender-cd",
            ModelKind::ReceiverCD => "receiver-cd",
            ModelKind::NoCD => "no-cd",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownModel(pub String);

impl fmt::Display for UnknownModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown model `{}` (expected strong-cd, sender-cd, receiver-cd or no-cd)",
            self.0
        )
    }
}

impl std::error::Error for UnknownModel {}

impl FromStr for ModelKind {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "strongcd" => Ok(ModelKind::StrongCD),
            "sendercd" => Ok(ModelKind::SenderCD),
            "receivercd" => Ok(ModelKind::ReceiverCD),
            "nocd" => Ok(ModelKind::NoCD),
            _ => Err(UnknownModel(s.to_string())),
        }
    }
}

/// What a device does in one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Action {
    Transmit(#[serde(serialize_with = "ser_bytes")] Bytes),
    Listen,
    Idle,
}

impl Action {
    pub fn role(&self) -> Role {
        match self {
            Action::Transmit(_) => Role::Sender,
            Action::Listen => Role::Listener,
            Action::Idle => Role::Idle,
        }
    }
}

/// What the channel hands back to a device after a slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Signal {
    Silence,
    Noise,
    Message(#[serde(serialize_with = "ser_bytes")] Bytes),
    None,
}

impl Signal {
    pub fn message(&self) -> Option<&Bytes> {
        match self {
            Signal::Message(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_message(&self) -> bool {
        matches!(self, Signal::Message(_))
    }
}

fn ser_bytes<S: serde::Serializer>(b: &Bytes, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_bytes(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Sender,
    Listener,
    Idle,
}

/// Signal received by a device in `role` when `transmitters` devices transmit.
/// `message` must be the lone message whenever `transmitters == 1`.
pub fn signal_for(
    role: Role,
    transmitters: usize,
    message: Option<&Bytes>,
    model: ModelKind,
) -> Signal {
    match role {
        Role::Idle => Signal::None,
        Role::Listener => match transmitters {
            0 => Signal::Silence,
            1 => Signal::Message(message.expect("lone transmitter has a message").clone()),
            _ if model.listener_detects_noise() => Signal::Noise,
            _ => Signal::Silence,
        },
        Role::Sender => {
            if !model.sender_feedback() {
                return Signal::None;
            }
            match transmitters {
                1 => Signal::Message(message.expect("lone transmitter has a message").clone()),
                _ if model == ModelKind::StrongCD => Signal::Noise,
                _ => Signal::Silence,
            }
        }
    }
}

/// Resolve one slot: every device gets the signal its action and the model dictate.
/// Depends only on the multiset of actions.
pub fn arbitrate(actions: &[Action], model: ModelKind) -> Vec<Signal> {
    let mut transmitters = 0usize;
    let mut message = None;
    for a in actions {
        if let Action::Transmit(m) = a {
            transmitters += 1;
            message = Some(m);
        }
    }
    let lone = if transmitters == 1 { message } else { None };
    actions
        .iter()
        .map(|a| signal_for(a.role(), transmitters, lone, model))
        .collect()
}
