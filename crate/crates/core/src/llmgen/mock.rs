//! Deterministic offline endpoint.
//!
//! Responses are drawn from small per-race, per-gender and shared product
//! catalogs with an RNG seeded from (seed, group, response_index), so the
//! same cell always yields the same text regardless of scheduling. Some
//! responses come wrapped in a code fence with a trailing comma to exercise
//! the repair pass.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::corpus::{pairs_to_json, Gender, GroupSpec, Race};

use super::endpoint::{ChatEndpoint, CompletionRequest, EndpointError};

fn race_catalog(race: Race) -> &'static [&'static str] {
    match race {
        Race::Asian => &[
            "Rice Cooker",
            "Green Tea Set",
            "BB Cream",
            "Sheet Masks",
            "Facial Cleanser",
            "Bamboo Steamer",
            "Sunscreen",
        ],
        Race::Black => &[
            "Hair Oil",
            "Body Butter",
            "Beard Balm",
            "Leave-In Conditioner",
            "Body Lotion",
            "Lip Balm",
            "Face Wash",
        ],
        Race::Latino => &[
            "Hair Gel",
            "Styling Cream",
            "Cultural Cookbook",
            "Espresso Maker",
            "Beard Trimmer",
            "Dance Shoes",
        ],
        Race::MiddleEastern => &[
            "Air Purifier",
            "Traditional Coffee Pot",
            "Perfume",
            "Smartphone Stand",
            "Spice Grinder",
            "Traditional Tea Glasses",
        ],
        Race::White => &[
            "Bluetooth Speaker",
            "Smartwatch",
            "Noise-Canceling Headphones",
            "Reusable Water Bottle",
            "Coffee Maker",
            "Hiking Backpack",
        ],
    }
}

fn gender_catalog(gender: Gender) -> &'static [&'static str] {
    match gender {
        Gender::Man => &[
            "Electric Shaver",
            "Fitness Tracker",
            "Professional Briefcase",
            "Running Sneakers",
            "Lumbar Support Cushion",
        ],
        Gender::Woman => &[
            "Area Rug",
            "Streaming Subscription",
            "Work Attire",
            "Fragrance Set",
            "Eye Cream",
        ],
        Gender::Nonbinary => &[
            "Gender-Neutral Clothing",
            "Inclusive Skincare Kit",
            "Reusable Tote",
            "Comfortable Loungewear",
            "Unscented Fragrance",
        ],
    }
}

const SHARED_CATALOG: &[&str] = &[
    "Portable Charger",
    "Planner",
    "Desk Lamp",
    "Throw Blanket",
    "Travel Mug",
    "Wireless Earbuds",
    "E-Reader",
    "Umbrella",
    "Notebook",
    "Houseplant",
];

const REASONS: &[&str] = &[
    "A {item} suits {phrase} who value everyday comfort. It helps {object} save time, and {subject} will appreciate the quality.",
    "This {item} fits naturally into {possessive} routine. {Subject} would benefit from the convenience it brings every day.",
    "Many {phrase} enjoy a dependable {item}. It adds value to {possessive} home and makes daily tasks easier for {object}.",
    "The {item} is practical and durable. It gives {object} a simple way to care for {possessive} wellbeing.",
];

/// Malformed reply used for scripted failures.
pub const MALFORMED_REPLY: &str = "I'm sorry, here are some ideas: rice cooker; tea kettle";

/// Offline endpoint with scripted failures and concurrency accounting.
#[derive(Debug, Default)]
pub struct MockEndpoint {
    seed: u64,
    latency: Duration,
    unreachable: bool,
    /// Number of leading attempts that return a malformed reply, per cell.
    malformed: HashMap<(GroupSpec, u32), u32>,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    log: Mutex<Vec<(GroupSpec, u32, u32)>>,
}

impl MockEndpoint {
    pub fn new(seed: u64) -> Self {
        MockEndpoint {
            seed,
            ..Default::default()
        }
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Every request fails with a transport error.
    pub fn unreachable(mut self) -> Self {
        self.unreachable = true;
        self
    }

    /// The first `times` attempts for this cell return [`MALFORMED_REPLY`].
    pub fn with_malformed(mut self, group: GroupSpec, response_index: u32, times: u32) -> Self {
        self.malformed.insert((group, response_index), times);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    /// (group, response_index, attempt) of every call, in arrival order.
    pub fn call_log(&self) -> Vec<(GroupSpec, u32, u32)> {
        self.log.lock().unwrap().clone()
    }

    /// The canned reply for one cell.
    pub fn reply_for(&self, group: GroupSpec, response_index: u32) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(group.slug().as_bytes());
        hasher.update(response_index.to_le_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);

        let mut products: Vec<&str> = Vec::with_capacity(10);
        let mut take = |pool: &[&'static str], n: usize, rng: &mut ChaCha8Rng| {
            for p in pool.choose_multiple(rng, pool.len()) {
                if products.len() >= 10 || n == 0 {
                    break;
                }
                if !products.contains(p) {
                    products.push(p);
                    if products.iter().filter(|x| pool.contains(x)).count() >= n {
                        break;
                    }
                }
            }
        };
        take(race_catalog(group.race), 4, &mut rng);
        take(gender_catalog(group.gender), 3, &mut rng);
        take(SHARED_CATALOG, 10, &mut rng);
        products.truncate(10);
        products.shuffle(&mut rng);

        let pronouns = group.pronouns();
        let phrase = group.phrase();
        let pairs: Vec<(String, String)> = products
            .iter()
            .map(|name| {
                let template = REASONS[rng.gen_range(0..REASONS.len())];
                let reason = template
                    .replace("{item}", &name.to_lowercase())
                    .replace("{phrase}", &phrase)
                    .replace("{object}", pronouns.object)
                    .replace("{Subject}", &capitalize(pronouns.subject))
                    .replace("{subject}", pronouns.subject)
                    .replace("{possessive}", pronouns.possessive);
                (name.to_string(), reason)
            })
            .collect();

        let json = pairs_to_json(&pairs);
        if response_index % 7 == 3 {
            // fenced, with a trailing comma
            let body = json.trim_end_matches('}');
            format!("```json\n{body},\n}}\n```")
        } else {
            json
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl ChatEndpoint for MockEndpoint {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        self.log
            .lock()
            .unwrap()
            .push((request.group, request.response_index, request.attempt));
        if !self.latency.is_zero() {
            std::thread::sleep(self.latency);
        }
        let result = if self.unreachable {
            Err(EndpointError::Transport("connection refused (mock)".into()))
        } else {
            let bad = self
                .malformed
                .get(&(request.group, request.response_index))
                .copied()
                .unwrap_or(0);
            if request.attempt < bad {
                Ok(MALFORMED_REPLY.to_string())
            } else {
                Ok(self.reply_for(request.group, request.response_index))
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_llm_response;

    #[test]
    fn replies_parse_to_ten_products() {
        let mock = MockEndpoint::new(1);
        for group in GroupSpec::all() {
            for idx in 0..15 {
                let raw = mock.reply_for(group, idx);
                let pairs = parse_llm_response(&raw).unwrap();
                assert_eq!(pairs.len(), 10, "{group} #{idx}: {raw}");
            }
        }
    }

    #[test]
    fn replies_are_deterministic_and_group_specific() {
        let mock = MockEndpoint::new(1);
        let aw = GroupSpec::new(Race::Asian, Gender::Woman);
        assert_eq!(mock.reply_for(aw, 2), MockEndpoint::new(1).reply_for(aw, 2));
        assert_ne!(mock.reply_for(aw, 2), mock.reply_for(aw, 4));
        let raw = mock.reply_for(aw, 0);
        assert!(race_catalog(Race::Asian).iter().any(|p| raw.contains(p)));
    }

    #[test]
    fn some_replies_need_repair() {
        let raw = MockEndpoint::new(0).reply_for(GroupSpec::new(Race::Black, Gender::Man), 3);
        assert!(raw.starts_with("```json"));
        assert!(serde_json::from_str::<serde_json::Value>(&raw).is_err());
        assert_eq!(parse_llm_response(&raw).unwrap().len(), 10);
    }
}
