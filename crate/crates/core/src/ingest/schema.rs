//! Built-in NetFlow v2 dataset schemas.

use crate::error::{Error, Result};

/// Column layout of a NetFlow v2 dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSchema {
    pub id: &'static str,
    pub src_ip: &'static str,
    pub dst_ip: &'static str,
    pub src_port: &'static str,
    pub dst_port: &'static str,
    /// Flow features in schema order, endpoints and ports excluded.
    pub features: &'static [&'static str],
    pub categorical: &'static [&'static str],
    pub label: &'static str,
    pub attack_type: &'static str,
}

/// The 43-column NetFlow v2 feature set shared by the NF-*-v2 datasets,
/// minus the two address and two port columns.
const NETFLOW_V2_FEATURES: &[&str] = &[
    "PROTOCOL",
    "L7_PROTO",
    "IN_BYTES",
    "IN_PKTS",
    "OUT_BYTES",
    "OUT_PKTS",
    "TCP_FLAGS",
    "CLIENT_TCP_FLAGS",
    "SERVER_TCP_FLAGS",
    "FLOW_DURATION_MILLISECONDS",
    "DURATION_IN",
    "DURATION_OUT",
    "MIN_TTL",
    "MAX_TTL",
    "LONGEST_FLOW_PKT",
    "SHORTEST_FLOW_PKT",
    "MIN_IP_PKT_LEN",
    "MAX_IP_PKT_LEN",
    "SRC_TO_DST_SECOND_BYTES",
    "DST_TO_SRC_SECOND_BYTES",
    "RETRANSMITTED_IN_BYTES",
    "RETRANSMITTED_IN_PKTS",
    "RETRANSMITTED_OUT_BYTES",
    "RETRANSMITTED_OUT_PKTS",
    "SRC_TO_DST_AVG_THROUGHPUT",
    "DST_TO_SRC_AVG_THROUGHPUT",
    "NUM_PKTS_UP_TO_128_BYTES",
    "NUM_PKTS_128_TO_256_BYTES",
    "NUM_PKTS_256_TO_512_BYTES",
    "NUM_PKTS_512_TO_1024_BYTES",
    "NUM_PKTS_1024_TO_1514_BYTES",
    "TCP_WIN_MAX_IN",
    "TCP_WIN_MAX_OUT",
    "ICMP_TYPE",
    "ICMP_IPV4_TYPE",
    "DNS_QUERY_ID",
    "DNS_QUERY_TYPE",
    "DNS_TTL_ANSWER",
    "FTP_COMMAND_RET_CODE",
];

const NETFLOW_V2_CATEGORICAL: &[&str] = &["PROTOCOL", "L7_PROTO", "TCP_FLAGS"];

pub const NF_UNSW_NB15_V2: DatasetSchema = DatasetSchema {
    id: "nf-unsw-nb15-v2",
    src_ip: "IPV4_SRC_ADDR",
    dst_ip: "IPV4_DST_ADDR",
    src_port: "L4_SRC_PORT",
    dst_port: "L4_DST_PORT",
    features: NETFLOW_V2_FEATURES,
    categorical: NETFLOW_V2_CATEGORICAL,
    label: "Label",
    attack_type: "Attack",
};

pub const NF_CSE_CIC_IDS2018_V2: DatasetSchema = DatasetSchema {
    id: "nf-cse-cic-ids2018-v2",
    ..NF_UNSW_NB15_V2
};

pub const SCHEMAS: &[&DatasetSchema] = &[&NF_UNSW_NB15_V2, &NF_CSE_CIC_IDS2018_V2];

pub fn schema(id: &str) -> Result<&'static DatasetSchema> {
    SCHEMAS
        .iter()
        .copied()
        .find(|s| s.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownSchema(id.to_string()))
}

impl DatasetSchema {
    /// Every non-label column: endpoints, ports and flow features.
    pub fn input_columns(&self) -> Vec<&'static str> {
        let mut cols = vec![self.src_ip, self.src_port, self.dst_ip, self.dst_port];
        cols.extend_from_slice(self.features);
        cols
    }

    pub fn is_categorical(&self, name: &str) -> bool {
        self.categorical.contains(&name)
    }
}
