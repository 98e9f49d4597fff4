//! Wire messages. One JSON object per WebSocket text message, tagged by
//! `"type"`.

use std::collections::BTreeMap;

use padpress_core::export::FrameRecord;
use padpress_core::Lattice;
use serde::{Deserialize, Serialize};

/// Client to server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    /// A new query point. `coords` must name every lattice axis.
    Input { seq: u64, coords: BTreeMap<String, f64> },
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Hello(Hello),
    Frame(FrameMessage),
    Error { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisInfo {
    pub name: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
}

/// Sent once on connect so viewers can configure themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub axes: Vec<AxisInfo>,
    pub rows: usize,
    pub cols: usize,
    pub full_scale_kpa: f64,
}

impl Hello {
    pub fn for_lattice(lattice: &Lattice) -> Self {
        Self {
            axes: lattice
                .axes()
                .iter()
                .map(|a| AxisInfo {
                    name: a.name().to_string(),
                    unit: a.unit().to_string(),
                    min: a.min(),
                    max: a.max(),
                })
                .collect(),
            rows: lattice.frame_rows(),
            cols: lattice.frame_cols(),
            full_scale_kpa: lattice.full_scale_kpa(),
        }
    }
}

/// One broadcast prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    /// Broadcast counter, strictly increasing per service.
    pub seq: u64,
    /// Server wall clock at render time, microseconds since the Unix epoch.
    pub t_us: u64,
    /// `seq` of the client input this frame was computed from; absent
    /// before the first input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_seq: Option<u64>,
    #[serde(flatten)]
    pub record: FrameRecord,
}

/// Why a client message was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputRejection {
    Malformed(String),
    UnknownAxis(String),
    MissingAxis(String),
    NonFinite(String),
}

impl std::fmt::Display for InputRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InputRejection::Malformed(e) => write!(f, "malformed message: {e}"),
            InputRejection::UnknownAxis(a) => write!(f, "unknown axis `{a}`"),
            InputRejection::MissingAxis(a) => write!(f, "missing coordinate for axis `{a}`"),
            InputRejection::NonFinite(a) => write!(f, "coordinate for axis `{a}` is not finite"),
        }
    }
}

/// Decodes an input message into `(seq, coords in axis order)`.
pub fn decode_input(lattice: &Lattice, text: &str) -> Result<(u64, Vec<f64>), InputRejection> {
    let ClientMessage::Input { seq, coords } =
        serde_json::from_str(text).map_err(|e| InputRejection::Malformed(e.to_string()))?;
    if let Some(unknown) = coords.keys().find(|name| lattice.axis_position(name).is_none()) {
        return Err(InputRejection::UnknownAxis(unknown.clone()));
    }
    let point = lattice
        .axes()
        .iter()
        .map(|a| {
            let v = *coords.get(a.name()).ok_or_else(|| InputRejection::MissingAxis(a.name().to_string()))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(InputRejection::NonFinite(a.name().to_string()))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((seq, point))
}

pub fn encode(message: &ServerMessage) -> String {
    serde_json::to_string(message).expect("server messages serialize")
}
