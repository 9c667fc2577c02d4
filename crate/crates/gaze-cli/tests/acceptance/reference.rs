//! Deliberately naive reference model of the spatial prefetcher.
//!
//! Flat vectors, linear scans, explicit timestamps, byte-per-bit
//! footprints. Written straight from the table policies and kept free of
//! the main implementation's structures so the two can check each other:
//! on any trace, the request stream must be identical.

use gaze_core::memsys::FillLevel;
use gaze_core::trace::MemoryAccess;

const REGION: u64 = 4096;
const BLOCK: u64 = 64;
const BLOCKS: usize = 64;
const FT_SETS: u64 = 8;
const FT_WAYS: usize = 8;
const AT_SETS: u64 = 8;
const AT_WAYS: usize = 8;
const PHT_SETS: usize = 64;
const PHT_WAYS: usize = 4;
const DPCT_ENTRIES: usize = 8;
const PB_SETS: u64 = 4;
const PB_WAYS: usize = 8;
const PB_DRAIN: usize = 2;
const HEAD: usize = 16;
const DEGREE: i32 = 4;
const DC_SATURATED: u8 = 7;
const DC_HALF: u8 = 4;
const DC_FAST_FLOOR: u8 = 6;

fn hashed_pc(pc: u64) -> u16 {
    let x = (pc >> 2) & ((1u64 << 48) - 1);
    ((x ^ (x >> 12) ^ (x >> 24) ^ (x >> 36)) & 0xFFF) as u16
}

struct FtRow {
    region: u64,
    pc_hash: u16,
    trigger: u8,
    used: u64,
}

struct AtRow {
    region: u64,
    pc_hash: u16,
    stride_flag: bool,
    trigger: u8,
    second: u8,
    last: u8,
    penultimate: u8,
    footprint: [bool; BLOCKS],
    used: u64,
}

struct PhtRow {
    set: usize,
    tag: u8,
    footprint: [bool; BLOCKS],
    used: u64,
}

struct PbRow {
    region: u64,
    // 0 = none, 1 = to L1D, 2 = to L2C
    states: [u8; BLOCKS],
    drained: [bool; BLOCKS],
    merged: u64,
}

pub struct NaiveGaze {
    ft: Vec<FtRow>,
    at: Vec<AtRow>,
    pht: Vec<PhtRow>,
    dpct: Vec<(u16, u64)>,
    dc: u8,
    pb: Vec<PbRow>,
    time: u64,
}

enum Prediction {
    Pattern([u8; BLOCKS], bool), // states, stride_flag
    NothingButStride,
}

impl NaiveGaze {
    pub fn new() -> Self {
        Self { ft: Vec::new(), at: Vec::new(), pht: Vec::new(), dpct: Vec::new(), dc: 0, pb: Vec::new(), time: 0 }
    }

    fn tick(&mut self) -> u64 {
        self.time += 1;
        self.time
    }

    pub fn observe(&mut self, access: &MemoryAccess) -> Vec<(u64, FillLevel)> {
        let region = access.vaddr / REGION;
        let offset = (access.vaddr / BLOCK % BLOCKS as u64) as usize;

        if let Some(i) = self.at.iter().position(|r| r.region == region) {
            self.at[i].used = self.tick();
            self.at[i].footprint[offset] = true;
            if self.at[i].stride_flag {
                let s1 = self.at[i].last as i32 - self.at[i].penultimate as i32;
                let s2 = offset as i32 - self.at[i].last as i32;
                if s1 == s2 && s1 != 0 {
                    let mut states = [0u8; BLOCKS];
                    let mut any = false;
                    for k in 1..=DEGREE {
                        let t = offset as i32 + k * s1;
                        if !(0..BLOCKS as i32).contains(&t) {
                            break;
                        }
                        states[t as usize] = 1;
                        any = true;
                    }
                    if any {
                        self.pb_merge(region, &states);
                    }
                }
            }
            let row = &mut self.at[i];
            row.penultimate = row.last;
            row.last = offset as u8;
        } else if let Some(i) = self.ft.iter().position(|r| r.region == region) {
            if self.ft[i].trigger == offset as u8 {
                self.ft[i].used = self.tick();
            } else {
                let fte = self.ft.swap_remove(i);
                let trigger = fte.trigger;
                let second = offset as u8;
                // insert into AT, evicting and training the set's LRU
                let set_rows: Vec<usize> = (0..self.at.len())
                    .filter(|&j| self.at[j].region % AT_SETS == region % AT_SETS)
                    .collect();
                if set_rows.len() == AT_WAYS {
                    let victim = *set_rows.iter().min_by_key(|&&j| self.at[j].used).unwrap();
                    let row = self.at.swap_remove(victim);
                    self.train(&row);
                }
                let mut footprint = [false; BLOCKS];
                footprint[trigger as usize] = true;
                footprint[second as usize] = true;
                let used = self.tick();
                self.at.push(AtRow {
                    region,
                    pc_hash: fte.pc_hash,
                    stride_flag: false,
                    trigger,
                    second,
                    last: second,
                    penultimate: trigger,
                    footprint,
                    used,
                });
                match self.predict(trigger, second, fte.pc_hash) {
                    Prediction::Pattern(mut states, stride_flag) => {
                        states[trigger as usize] = 0;
                        states[second as usize] = 0;
                        if states.iter().any(|&s| s != 0) {
                            self.pb_merge(region, &states);
                        }
                        self.at.last_mut().unwrap().stride_flag = stride_flag;
                    }
                    Prediction::NothingButStride => {
                        self.at.last_mut().unwrap().stride_flag = true;
                    }
                }
            }
        } else {
            let set_rows: Vec<usize> = (0..self.ft.len())
                .filter(|&j| self.ft[j].region % FT_SETS == region % FT_SETS)
                .collect();
            if set_rows.len() == FT_WAYS {
                let victim = *set_rows.iter().min_by_key(|&&j| self.ft[j].used).unwrap();
                self.ft.swap_remove(victim);
            }
            let used = self.tick();
            self.ft.push(FtRow { region, pc_hash: hashed_pc(access.pc), trigger: offset as u8, used });
        }

        self.pb_drain()
    }

    fn predict(&mut self, trigger: u8, second: u8, pc_hash: u16) -> Prediction {
        if trigger == 0 && second == 1 {
            let in_dpct = if let Some(e) = self.dpct.iter_mut().find(|(h, _)| *h == pc_hash) {
                e.1 = self.time + 1;
                self.time += 1;
                true
            } else {
                self.time += 1;
                false
            };
            if in_dpct || self.dc >= DC_SATURATED {
                let mut states = [0u8; BLOCKS];
                for (o, s) in states.iter_mut().enumerate() {
                    *s = if o < HEAD { 1 } else { 2 };
                }
                return Prediction::Pattern(states, true);
            }
            if self.dc >= DC_HALF {
                let mut states = [0u8; BLOCKS];
                for s in states.iter_mut().take(HEAD) {
                    *s = 2;
                }
                return Prediction::Pattern(states, true);
            }
            return Prediction::NothingButStride;
        }
        let set = trigger as usize % PHT_SETS;
        if let Some(row) = self.pht.iter_mut().find(|r| r.set == set && r.tag == second) {
            row.used = self.time + 1;
            self.time += 1;
            let mut states = [0u8; BLOCKS];
            for (o, s) in states.iter_mut().enumerate() {
                if row.footprint[o] {
                    *s = 1;
                }
            }
            return Prediction::Pattern(states, false);
        }
        self.time += 1;
        Prediction::NothingButStride
    }

    fn train(&mut self, row: &AtRow) {
        if row.trigger == 0 && row.second == 1 {
            if row.footprint.iter().all(|&b| b) {
                // record the dense trigger PC, LRU replacement
                if let Some(e) = self.dpct.iter_mut().find(|(h, _)| *h == row.pc_hash) {
                    e.1 = self.time + 1;
                    self.time += 1;
                } else {
                    if self.dpct.len() == DPCT_ENTRIES {
                        let victim = self
                            .dpct
                            .iter()
                            .enumerate()
                            .min_by_key(|(_, (_, used))| *used)
                            .map(|(i, _)| i)
                            .unwrap();
                        self.dpct.swap_remove(victim);
                    }
                    let used = self.tick();
                    self.dpct.push((row.pc_hash, used));
                }
                self.dc = (self.dc + 1).min(DC_SATURATED);
            } else {
                let step = if self.dc >= DC_FAST_FLOOR { 2 } else { 1 };
                self.dc = self.dc.saturating_sub(step);
            }
            return;
        }
        let set = row.trigger as usize % PHT_SETS;
        if let Some(existing) = self.pht.iter_mut().find(|r| r.set == set && r.tag == row.second) {
            existing.footprint = row.footprint;
            existing.used = self.time + 1;
            self.time += 1;
            return;
        }
        let in_set: Vec<usize> = (0..self.pht.len()).filter(|&j| self.pht[j].set == set).collect();
        if in_set.len() == PHT_WAYS {
            let victim = *in_set.iter().min_by_key(|&&j| self.pht[j].used).unwrap();
            self.pht.swap_remove(victim);
        }
        let used = self.tick();
        self.pht.push(PhtRow { set, tag: row.second, footprint: row.footprint, used });
    }

    fn pb_merge(&mut self, region: u64, states: &[u8; BLOCKS]) {
        if let Some(row) = self.pb.iter_mut().find(|r| r.region == region) {
            for (o, &incoming) in states.iter().enumerate() {
                if row.drained[o] || incoming == 0 {
                    continue;
                }
                // urgency: L1D beats L2C beats nothing
                if incoming == 1 || row.states[o] == 0 {
                    row.states[o] = incoming;
                }
            }
            row.merged = self.time + 1;
            self.time += 1;
            return;
        }
        let in_set: Vec<usize> =
            (0..self.pb.len()).filter(|&j| self.pb[j].region % PB_SETS == region % PB_SETS).collect();
        if in_set.len() == PB_WAYS {
            let victim = *in_set.iter().min_by_key(|&&j| self.pb[j].merged).unwrap();
            self.pb.swap_remove(victim);
        }
        let merged = self.tick();
        self.pb.push(PbRow { region, states: *states, drained: [false; BLOCKS], merged });
    }

    fn pb_drain(&mut self) -> Vec<(u64, FillLevel)> {
        let mut out = Vec::new();
        while out.len() < PB_DRAIN {
            let Some(i) = (0..self.pb.len())
                .filter(|&j| self.pb[j].states.iter().any(|&s| s != 0))
                .max_by_key(|&j| self.pb[j].merged)
            else {
                break;
            };
            let row = &mut self.pb[i];
            let offset = row.states.iter().position(|&s| s != 0).unwrap();
            let level = if row.states[offset] == 1 { FillLevel::L1d } else { FillLevel::L2c };
            row.states[offset] = 0;
            row.drained[offset] = true;
            out.push((row.region * REGION + offset as u64 * BLOCK, level));
        }
        out
    }
}
