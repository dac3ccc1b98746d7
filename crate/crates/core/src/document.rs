//! TOML documents: presentations and build specifications.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{AbelianGroup, Order};
use crate::classification::{ClassificationError, Params};
use crate::group_presentation::GroupPresentation;
use crate::ra_loop::RaLoop;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("exponent does not fit in i64")]
    ExponentRange,
}

/// A presentation of `G` (and of `M(G, *, g0)` when `g0` is present).
/// Factor order 0 stands for an infinite cyclic factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationDoc {
    pub factor_orders: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_names: Option<Vec<String>>,
    pub t1_index: usize,
    pub m1: u32,
    pub x_sq: Vec<i64>,
    pub y_sq: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<i64>>,
}

impl PresentationDoc {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        toml::from_str(text).map_err(|e| DocumentError::Syntax(e.message().to_string()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("plain fields serialize")
    }

    pub fn from_group(g: &GroupPresentation) -> Result<Self, DocumentError> {
        let c = g.center();
        let ints = |v: &crate::abelian::ExponentVector| v.to_i64s().ok_or(DocumentError::ExponentRange);
        Ok(PresentationDoc {
            factor_orders: c
                .orders()
                .iter()
                .map(|o| match o {
                    Order::Finite(n) => *n,
                    Order::Infinite => 0,
                })
                .collect(),
            factor_names: Some(c.names().to_vec()),
            t1_index: g.t1_index(),
            m1: g.m1(),
            x_sq: ints(g.x_sq())?,
            y_sq: ints(g.y_sq())?,
            g0: None,
        })
    }

    pub fn from_loop(l: &RaLoop) -> Result<Self, DocumentError> {
        let mut doc = Self::from_group(l.group())?;
        doc.g0 = Some(l.g0().to_i64s().ok_or(DocumentError::ExponentRange)?);
        Ok(doc)
    }

    pub fn to_group(&self) -> Result<GroupPresentation, DocumentError> {
        let invalid = |e: &dyn std::fmt::Display| DocumentError::Invalid(e.to_string());
        let orders: Vec<Order> = self
            .factor_orders
            .iter()
            .map(|&n| if n == 0 { Order::Infinite } else { Order::Finite(n) })
            .collect();
        let center = match &self.factor_names {
            Some(names) => AbelianGroup::with_names(orders, names.clone()),
            None => AbelianGroup::new(orders),
        }
        .map_err(|e| invalid(&e))?;
        let big = |v: &[i64]| v.iter().map(|&e| BigInt::from(e)).collect::<Vec<_>>();
        GroupPresentation::new(center, self.t1_index, self.m1, &big(&self.x_sq), &big(&self.y_sq))
            .map_err(|e| invalid(&e))
    }

    pub fn to_loop(&self) -> Result<RaLoop, DocumentError> {
        let g0 = self
            .g0
            .as_ref()
            .ok_or_else(|| DocumentError::Invalid("missing g0".into()))?;
        let g0: Vec<BigInt> = g0.iter().map(|&e| BigInt::from(e)).collect();
        RaLoop::new(self.to_group()?, &g0).map_err(|e| DocumentError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Row,
    Type,
}

/// `kind = "row" | "type"`, `id`, and an optional `[params]` table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub kind: SpecKind,
    pub id: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, u32>,
}

impl SpecDoc {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        toml::from_str(text).map_err(|e| DocumentError::Syntax(e.message().to_string()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("plain fields serialize")
    }

    pub fn params(&self) -> Result<Params, ClassificationError> {
        let mut p = Params::default();
        for (name, value) in &self.params {
            p.set(name, *value)?;
        }
        Ok(p)
    }
}
