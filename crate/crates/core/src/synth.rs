//! Seeded synthetic diary generator with a controlled persons-per-day
//! distribution. The generated corpus carries its own ground truth.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::date::Date;
use crate::entity::EntityId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub days: u32,
    pub persons: usize,
    pub mean_per_day: f64,
    pub sd_per_day: f64,
    pub start: Date,
    /// Popularity exponent for repeat mentions; larger concentrates repeats on fewer people.
    pub zipf_exponent: f64,
    /// Share of mentions written with an honorific prefix.
    pub honorific_share: f64,
    /// Distinct names that appear only after an honorific and are absent from the seed aliases.
    pub unknown_names: usize,
    /// Name of the diarist, seeded as an entity and mentioned on some days.
    pub ego: String,
    pub volume_id: String,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            days: 240,
            persons: 420,
            mean_per_day: 7.5,
            sd_per_day: 5.5,
            start: Date::new(1891, 5, 5).expect("valid date"),
            zipf_exponent: 1.1,
            honorific_share: 0.25,
            unknown_names: 6,
            ego: String::from("Joseph"),
            volume_id: String::from("vol01"),
            seed: 1891,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator parameter: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthPerson {
    pub id: EntityId,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub volume_id: String,
    pub text: String,
    pub persons: Vec<SynthPerson>,
    pub ego: SynthPerson,
    /// Ground-truth persons per day, ego excluded.
    pub truth: Vec<(Date, BTreeSet<EntityId>)>,
}

const HONORIFICS: [&str; 5] = ["Mr", "Capt", "Dr", "Haji", "Sheikh"];
const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 4] = ["", "n", "r", "s"];
const OPENERS: [&str; 8] = [
    "Called on",
    "Dined with",
    "Walked out with",
    "Letters from",
    "Met",
    "Visited by",
    "Went aboard with",
    "Saw",
];
const FILLER: [&str; 10] = [
    "the weather was fine",
    "much wind from the north",
    "the river rose a little",
    "nothing of note in the town",
    "cargo landed in the morning",
    "very hot in the afternoon",
    "a quiet evening at home",
    "the steamer arrived late",
    "wrote letters until night",
    "heavy rain after noon",
];
const WEEKDAYS: [&str; 7] = ["Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"];
const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    let mut w = String::new();
    for k in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(VOWELS.choose(rng).unwrap());
        if k + 1 == syllables {
            w.push_str(CODAS.choose(rng).unwrap());
        }
    }
    let mut cs = w.chars();
    let first = cs.next().unwrap().to_ascii_uppercase();
    core::iter::once(first).chain(cs).collect()
}

fn weekday(date: Date) -> &'static str {
    // 1970-01-01 was a Thursday.
    WEEKDAYS[(date.to_days() + 4).rem_euclid(7) as usize]
}

fn ordinal(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

/// Daily counts with the requested mean and population SD, rounded and
/// clamped to `[1, persons]`, then nudged so the total equals round(mean * days).
fn daily_counts(p: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = p.days as usize;
    // Gamma(2) draws give a right-skewed shape similar to diary mention counts.
    let raw: Vec<f64> = (0..n)
        .map(|_| -libm::log(1.0 - rng.gen::<f64>()) - libm::log(1.0 - rng.gen::<f64>()))
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let var = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let sd = libm::sqrt(var).max(f64::MIN_POSITIVE);
    let cap = p.persons.max(1);
    let mut counts: Vec<usize> = raw
        .iter()
        .map(|x| {
            let v = libm::round(p.mean_per_day + p.sd_per_day * (x - mean) / sd);
            (v.max(1.0) as usize).min(cap)
        })
        .collect();
    let target = (libm::round(p.mean_per_day * n as f64) as usize).clamp(n, n * cap).max(p.persons);
    let mut total: usize = counts.iter().sum();
    while total != target {
        let d = rng.gen_range(0..n);
        if total < target && counts[d] < cap {
            counts[d] += 1;
            total += 1;
        } else if total > target && counts[d] > 1 {
            counts[d] -= 1;
            total -= 1;
        }
    }
    counts
}

pub fn generate(p: &SynthParams) -> Result<SynthCorpus, SynthError> {
    if p.days == 0 {
        return Err(SynthError::Invalid("days must be positive"));
    }
    if p.persons == 0 {
        return Err(SynthError::Invalid("persons must be positive"));
    }
    if !(p.mean_per_day.is_finite() && p.mean_per_day >= 1.0) {
        return Err(SynthError::Invalid("mean_per_day must be at least 1"));
    }
    if !(p.sd_per_day.is_finite() && p.sd_per_day >= 0.0) {
        return Err(SynthError::Invalid("sd_per_day must be non-negative"));
    }
    if !(0.0..=1.0).contains(&p.honorific_share) {
        return Err(SynthError::Invalid("honorific_share must be within [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let mut taken = BTreeSet::new();
    taken.insert(p.ego.to_lowercase());
    let mut fresh = |rng: &mut ChaCha8Rng, syllables: usize| loop {
        let w = word(rng, syllables);
        if taken.insert(w.to_lowercase()) {
            return w;
        }
    };
    let persons: Vec<SynthPerson> = (0..p.persons)
        .map(|k| {
            let given = fresh(&mut rng, 2);
            let surname = fresh(&mut rng, 2 + usize::from(k % 3 == 0));
            SynthPerson {
                id: EntityId::new(format!("p{k:04}")),
                display_name: format!("{given} {surname}"),
            }
        })
        .collect();
    let unknown: Vec<String> = (0..p.unknown_names).map(|_| fresh(&mut rng, 3)).collect();
    let ego = SynthPerson {
        id: EntityId::new(p.ego.to_lowercase()),
        display_name: p.ego.clone(),
    };

    let counts = daily_counts(p, &mut rng);
    // Each unknown name gets one guaranteed day; more turn up at random.
    let mut notes: Vec<Vec<usize>> = vec![Vec::new(); p.days as usize];
    for u in 0..unknown.len() {
        notes[rng.gen_range(0..p.days as usize)].push(u);
    }
    let mut slots: Vec<usize> = counts.iter().enumerate().flat_map(|(d, &c)| vec![d; c]).collect();
    slots.shuffle(&mut rng);
    let mut order: Vec<usize> = (0..p.persons).collect();
    order.shuffle(&mut rng);
    let mut days: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); p.days as usize];
    // Everyone appears once; the remaining slots follow a Zipf popularity.
    for (&person, &d) in order.iter().zip(&slots) {
        days[d].insert(person);
    }
    let weights: Vec<f64> = (0..p.persons)
        .map(|r| 1.0 / libm::pow((r + 1) as f64, p.zipf_exponent))
        .collect();
    let total_weight: f64 = weights.iter().sum();
    for &d in &slots[p.persons.min(slots.len())..] {
        loop {
            let mut u = rng.gen::<f64>() * total_weight;
            let mut pick = p.persons - 1;
            for (r, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = r;
                    break;
                }
                u -= w;
            }
            if days[d].insert(order[pick]) {
                break;
            }
        }
    }

    let mut text = String::new();
    let mut truth = Vec::with_capacity(days.len());
    for (d, people) in days.iter().enumerate() {
        let date = p.start.add_days(d as i64);
        if d % 7 == 3 {
            text.push_str(&format!(
                "{} {}{} {} {}\n",
                weekday(date),
                date.day(),
                ordinal(date.day()),
                MONTHS[date.month() as usize - 1],
                date.year()
            ));
        } else {
            text.push_str(&format!("{date}\n"));
        }
        let mut names: Vec<usize> = people.iter().copied().collect();
        names.shuffle(&mut rng);
        let mut lines = Vec::new();
        if rng.gen_bool(0.3) {
            lines.push(format!("{} {}.", p.ego, FILLER.choose(&mut rng).unwrap()));
        }
        for chunk in names.chunks(4) {
            let rendered: Vec<String> = chunk
                .iter()
                .map(|&k| {
                    let name = &persons[k].display_name;
                    if rng.gen_bool(p.honorific_share) {
                        format!("{} {name}", HONORIFICS.choose(&mut rng).unwrap())
                    } else {
                        name.clone()
                    }
                })
                .collect();
            lines.push(format!(
                "{} {}; {}.",
                OPENERS.choose(&mut rng).unwrap(),
                rendered.join(", "),
                FILLER.choose(&mut rng).unwrap()
            ));
        }
        let mut noted = notes[d].clone();
        if !unknown.is_empty() && rng.gen_bool(0.05) {
            noted.push(rng.gen_range(0..unknown.len()));
        }
        for u in noted {
            lines.push(format!("A note came from Capt {} about the cargo.", unknown[u]));
        }
        if lines.is_empty() {
            let f = FILLER.choose(&mut rng).unwrap();
            lines.push(format!("{}{}.", f[..1].to_uppercase(), &f[1..]));
        }
        for l in lines {
            text.push_str(&l);
            text.push('\n');
        }
        text.push('\n');
        truth.push((date, people.iter().map(|&k| persons[k].id.clone()).collect()));
    }

    Ok(SynthCorpus {
        volume_id: p.volume_id.clone(),
        text,
        persons,
        ego,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_person_appears_and_days_match() {
        let p = SynthParams {
            days: 30,
            persons: 40,
            ..SynthParams::default()
        };
        let c = generate(&p).unwrap();
        assert_eq!(c.truth.len(), 30);
        let seen: BTreeSet<_> = c.truth.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
        assert_eq!(seen.len(), 40);
    }

    #[test]
    fn unknown_names_all_occur() {
        let p = SynthParams {
            days: 20,
            persons: 30,
            unknown_names: 4,
            ..SynthParams::default()
        };
        let c = generate(&p).unwrap();
        assert!(c.text.matches("A note came from Capt ").count() >= 4);
    }

    #[test]
    fn deterministic() {
        let p = SynthParams {
            days: 20,
            persons: 15,
            ..SynthParams::default()
        };
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal(1), "st");
        assert_eq!(ordinal(12), "th");
        assert_eq!(ordinal(22), "nd");
        assert_eq!(ordinal(23), "rd");
    }
}
