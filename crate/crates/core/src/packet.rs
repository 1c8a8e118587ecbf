//! Ethernet II + ARP frame types and the 42-byte wire codec.
//!
//! Besides the RFC 826 request (1) and reply (2) opcodes, the codec carries two
//! alert opcodes: broadcast alert (25) and unicast alert to the router (26).
//! Alerts reuse the standard 28-byte ARP body unchanged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ETHERTYPE_ARP: u16 = 0x0806;
pub const ARP_HTYPE_ETHERNET: u16 = 1;
pub const ARP_PTYPE_IPV4: u16 = 0x0800;
pub const ARP_HLEN: u8 = 6;
pub const ARP_PLEN: u8 = 4;

pub const ETH_HEADER_LEN: usize = 14;
pub const ARP_BODY_LEN: usize = 28;
pub const FRAME_LEN: usize = ETH_HEADER_LEN + ARP_BODY_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MacAddress(pub [u8; 6]);

impl MacAddress {
    pub const NULL: MacAddress = MacAddress([0; 6]);
    pub const BROADCAST: MacAddress = MacAddress([0xff; 6]);

    pub fn is_null(&self) -> bool {
        *self == Self::NULL
    }

    pub fn is_broadcast(&self) -> bool {
        *self == Self::BROADCAST
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }
}

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid address {0:?}")]
pub struct AddressParseError(pub String);

impl FromStr for MacAddress {
    type Err = AddressParseError;

    /// Accepts colon-separated groups of one or two hex digits, so the
    /// abbreviated `00:5:79:66:68:01` form parses too.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AddressParseError(s.to_string());
        let mut octets = [0u8; 6];
        let mut parts = s.split(':');
        for octet in octets.iter_mut() {
            let part = parts.next().ok_or_else(err)?;
            if part.is_empty() || part.len() > 2 {
                return Err(err());
            }
            *octet = u8::from_str_radix(part, 16).map_err(|_| err())?;
        }
        if parts.next().is_some() {
            return Err(err());
        }
        Ok(MacAddress(octets))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Ipv4Address(pub [u8; 4]);

impl Ipv4Address {
    pub const UNSPECIFIED: Ipv4Address = Ipv4Address([0; 4]);

    pub const fn new(a: u8, b: u8, c: u8, d: u8) -> Self {
        Ipv4Address([a, b, c, d])
    }

    pub fn octets(&self) -> [u8; 4] {
        self.0
    }
}

impl fmt::Display for Ipv4Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.0;
        write!(f, "{}.{}.{}.{}", o[0], o[1], o[2], o[3])
    }
}

impl FromStr for Ipv4Address {
    type Err = AddressParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ip: std::net::Ipv4Addr = s.parse().map_err(|_| AddressParseError(s.to_string()))?;
        Ok(Ipv4Address(ip.octets()))
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(MacAddress);
string_serde!(Ipv4Address);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opcode {
    Request,
    Reply,
    BroadcastAlert,
    UnicastAlert,
}

impl Opcode {
    pub fn code(self) -> u16 {
        match self {
            Opcode::Request => 1,
            Opcode::Reply => 2,
            Opcode::BroadcastAlert => 25,
            Opcode::UnicastAlert => 26,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            1 => Some(Opcode::Request),
            2 => Some(Opcode::Reply),
            25 => Some(Opcode::BroadcastAlert),
            26 => Some(Opcode::UnicastAlert),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EthernetHeader {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub ethertype: u16,
}

/// ARP body. The fixed fields (htype, ptype, hlen, plen) are implied by the
/// type and written by the encoder; decoding rejects anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArpMessage {
    pub opcode: Opcode,
    pub sender_mac: MacAddress,
    pub sender_ip: Ipv4Address,
    pub target_mac: MacAddress,
    pub target_ip: Ipv4Address,
}

impl ArpMessage {
    pub const HTYPE: u16 = ARP_HTYPE_ETHERNET;
    pub const PTYPE: u16 = ARP_PTYPE_IPV4;
    pub const HLEN: u8 = ARP_HLEN;
    pub const PLEN: u8 = ARP_PLEN;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub eth: EthernetHeader,
    pub arp: ArpMessage,
    /// Simulation sequence number; never serialized.
    pub frame_id: u64,
}

impl Frame {
    /// Builds a frame with ethertype 0x0806.
    pub fn new(dst: MacAddress, src: MacAddress, arp: ArpMessage, frame_id: u64) -> Self {
        Frame {
            eth: EthernetHeader {
                dst,
                src,
                ethertype: ETHERTYPE_ARP,
            },
            arp,
            frame_id,
        }
    }

    /// Equality ignoring `frame_id`.
    pub fn same_wire(&self, other: &Frame) -> bool {
        self.eth == other.eth && self.arp == other.arp
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("frame is {0} bytes, expected {FRAME_LEN}")]
    WrongLength(usize),
    #[error("ethertype 0x{0:04x} is not ARP")]
    WrongEthertype(u16),
    #[error("unknown ARP opcode {0}")]
    UnknownOpcode(u16),
    #[error("bad ARP fixed field {field} = {value}")]
    BadFixedField { field: &'static str, value: u16 },
}

pub fn encode_frame(f: &Frame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[0..6].copy_from_slice(&f.eth.dst.0);
    out[6..12].copy_from_slice(&f.eth.src.0);
    out[12..14].copy_from_slice(&f.eth.ethertype.to_be_bytes());
    let body = &mut out[ETH_HEADER_LEN..];
    body[0..2].copy_from_slice(&ArpMessage::HTYPE.to_be_bytes());
    body[2..4].copy_from_slice(&ArpMessage::PTYPE.to_be_bytes());
    body[4] = ArpMessage::HLEN;
    body[5] = ArpMessage::PLEN;
    body[6..8].copy_from_slice(&f.arp.opcode.code().to_be_bytes());
    body[8..14].copy_from_slice(&f.arp.sender_mac.0);
    body[14..18].copy_from_slice(&f.arp.sender_ip.0);
    body[18..24].copy_from_slice(&f.arp.target_mac.0);
    body[24..28].copy_from_slice(&f.arp.target_ip.0);
    out
}

/// Decodes a 42-byte frame. Checks run in wire order: length, ethertype,
/// fixed fields, opcode.
pub fn decode_frame(bytes: &[u8], frame_id: u64) -> Result<Frame, DecodeError> {
    if bytes.len() != FRAME_LEN {
        return Err(DecodeError::WrongLength(bytes.len()));
    }
    let be16 = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
    let mac = |i: usize| {
        let mut m = [0u8; 6];
        m.copy_from_slice(&bytes[i..i + 6]);
        MacAddress(m)
    };
    let ip = |i: usize| Ipv4Address([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);

    let ethertype = be16(12);
    if ethertype != ETHERTYPE_ARP {
        return Err(DecodeError::WrongEthertype(ethertype));
    }
    let b = ETH_HEADER_LEN;
    let htype = be16(b);
    if htype != ArpMessage::HTYPE {
        return Err(DecodeError::BadFixedField {
            field: "htype",
            value: htype,
        });
    }
    let ptype = be16(b + 2);
    if ptype != ArpMessage::PTYPE {
        return Err(DecodeError::BadFixedField {
            field: "ptype",
            value: ptype,
        });
    }
    if bytes[b + 4] != ArpMessage::HLEN {
        return Err(DecodeError::BadFixedField {
            field: "hlen",
            value: bytes[b + 4] as u16,
        });
    }
    if bytes[b + 5] != ArpMessage::PLEN {
        return Err(DecodeError::BadFixedField {
            field: "plen",
            value: bytes[b + 5] as u16,
        });
    }
    let code = be16(b + 6);
    let opcode = Opcode::from_code(code).ok_or(DecodeError::UnknownOpcode(code))?;

    Ok(Frame {
        eth: EthernetHeader {
            dst: mac(0),
            src: mac(6),
            ethertype,
        },
        arp: ArpMessage {
            opcode,
            sender_mac: mac(b + 8),
            sender_ip: ip(b + 14),
            target_mac: mac(b + 18),
            target_ip: ip(b + 24),
        },
        frame_id,
    })
}

/// The CLCC core rule: the ARP sender hardware address must equal the
/// Ethernet source address.
pub fn is_cross_layer_consistent(f: &Frame) -> bool {
    f.arp.sender_mac == f.eth.src
}

/// Length of one trace record: little-endian nanosecond timestamp + frame.
pub const TRACE_RECORD_LEN: usize = 8 + FRAME_LEN;

pub fn encode_trace_record(at_nanos: u64, f: &Frame) -> [u8; TRACE_RECORD_LEN] {
    let mut out = [0u8; TRACE_RECORD_LEN];
    out[..8].copy_from_slice(&at_nanos.to_le_bytes());
    out[8..].copy_from_slice(&encode_frame(f));
    out
}

/// Splits a trace dump into (timestamp, frame) pairs. Frame ids are assigned
/// in record order starting at zero.
pub fn decode_trace(bytes: &[u8]) -> Result<Vec<(u64, Frame)>, DecodeError> {
    if !bytes.len().is_multiple_of(TRACE_RECORD_LEN) {
        return Err(DecodeError::WrongLength(bytes.len() % TRACE_RECORD_LEN));
    }
    bytes
        .chunks_exact(TRACE_RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| {
            let mut ts = [0u8; 8];
            ts.copy_from_slice(&rec[..8]);
            Ok((u64::from_le_bytes(ts), decode_frame(&rec[8..], i as u64)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mac(s: &str) -> MacAddress {
        s.parse().unwrap()
    }

    fn ip(s: &str) -> Ipv4Address {
        s.parse().unwrap()
    }

    fn frame(
        opcode: Opcode,
        eth_src: MacAddress,
        sender_mac: MacAddress,
        sender_ip: Ipv4Address,
    ) -> Frame {
        Frame::new(
            MacAddress::BROADCAST,
            eth_src,
            ArpMessage {
                opcode,
                sender_mac,
                sender_ip,
                target_mac: MacAddress::NULL,
                target_ip: Ipv4Address::UNSPECIFIED,
            },
            0,
        )
    }

    #[test]
    fn special_addresses() {
        assert_eq!(MacAddress::NULL.to_string(), "00:00:00:00:00:00");
        assert_eq!(MacAddress::BROADCAST.to_string(), "ff:ff:ff:ff:ff:ff");
        assert_eq!(mac("00:5:79:66:68:01").to_string(), "00:05:79:66:68:01");
        assert_eq!(mac("00:05:79:66:68:AF").0[5], 0xaf);
        assert!("00:05:79:66:68".parse::<MacAddress>().is_err());
        assert!("00:05:79:66:68:01:02".parse::<MacAddress>().is_err());
        assert!("00:005:79:66:68:01".parse::<MacAddress>().is_err());
        assert_eq!(ip("192.169.1.10").to_string(), "192.169.1.10");
    }

    #[test]
    fn fixed_field_layout() {
        let f = Frame::new(
            MacAddress::NULL,
            MacAddress::NULL,
            ArpMessage {
                opcode: Opcode::Request,
                sender_mac: MacAddress::NULL,
                sender_ip: Ipv4Address::UNSPECIFIED,
                target_mac: MacAddress::NULL,
                target_ip: Ipv4Address::UNSPECIFIED,
            },
            0,
        );
        let b = encode_frame(&f);
        assert_eq!(b.len(), 42);
        assert_eq!(&b[12..14], &[0x08, 0x06]);
        assert_eq!(&b[20..22], &[0x00, 0x01]);
        assert_eq!(&b[14..20], &[0x00, 0x01, 0x08, 0x00, 6, 4]);
    }

    #[test]
    fn sender_fields_on_wire() {
        let a = mac("00:5:79:66:68:01");
        let f = frame(Opcode::Request, a, a, ip("192.169.1.10"));
        let b = encode_frame(&f);
        let body = &b[ETH_HEADER_LEN..];
        assert_eq!(&body[8..14], &[0x00, 0x05, 0x79, 0x66, 0x68, 0x01]);
        assert_eq!(&body[14..18], &[0xc0, 0xa9, 0x01, 0x0a]);
    }

    #[test]
    fn decode_errors() {
        let a = mac("00:05:79:66:68:01");
        let good = encode_frame(&frame(Opcode::Reply, a, a, ip("192.169.1.10")));

        assert_eq!(
            decode_frame(&good[..41], 0),
            Err(DecodeError::WrongLength(41))
        );

        let mut b = good;
        b[12..14].copy_from_slice(&0x0800u16.to_be_bytes());
        assert_eq!(
            decode_frame(&b, 0),
            Err(DecodeError::WrongEthertype(0x0800))
        );

        let mut b = good;
        b[20..22].copy_from_slice(&3u16.to_be_bytes());
        assert_eq!(decode_frame(&b, 0), Err(DecodeError::UnknownOpcode(3)));

        let mut b = good;
        b[18] = 8;
        assert!(matches!(
            decode_frame(&b, 0),
            Err(DecodeError::BadFixedField {
                field: "hlen",
                value: 8
            })
        ));

        let decoded = decode_frame(&good, 9).unwrap();
        assert_eq!(decoded.frame_id, 9);
        assert_eq!(decoded.arp.opcode, Opcode::Reply);
    }

    #[test]
    fn alert_opcodes_round_trip() {
        let a = mac("00:05:79:66:68:01");
        for op in [Opcode::BroadcastAlert, Opcode::UnicastAlert] {
            let f = frame(op, a, a, ip("192.169.1.10"));
            let back = decode_frame(&encode_frame(&f), 0).unwrap();
            assert_eq!(back, f);
        }
        assert_eq!(Opcode::BroadcastAlert.code(), 25);
        assert_eq!(Opcode::UnicastAlert.code(), 26);
    }

    #[test]
    fn cross_layer_samples() {
        let eth = mac("00:5:79:66:63:01");
        let f = frame(
            Opcode::Request,
            eth,
            mac("00:5:79:66:68:12"),
            ip("192.169.1.10"),
        );
        assert!(!is_cross_layer_consistent(&f));
        let f = frame(
            Opcode::BroadcastAlert,
            eth,
            MacAddress::NULL,
            ip("192.169.1.10"),
        );
        assert!(!is_cross_layer_consistent(&f));
        let a = mac("00:05:79:66:68:01");
        assert!(is_cross_layer_consistent(&frame(
            Opcode::Request,
            a,
            a,
            ip("192.169.1.10")
        )));
    }

    #[test]
    fn trace_records() {
        let a = mac("00:05:79:66:68:01");
        let f = frame(Opcode::Request, a, a, ip("192.169.1.10"));
        let mut dump = encode_trace_record(1_500_000_000, &f).to_vec();
        dump.extend_from_slice(&encode_trace_record(2, &f));
        let recs = decode_trace(&dump).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].0, 1_500_000_000);
        assert_eq!(&dump[..8], &1_500_000_000u64.to_le_bytes());
        assert!(recs[1].1.same_wire(&f));
        assert!(decode_trace(&dump[..49]).is_err());
    }
}
