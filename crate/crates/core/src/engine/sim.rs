//! In-process harness: one thread per party over an in-memory mesh.

use std::thread;

use crate::dealer::{Dealer, Demand, MaterialStore};
use crate::net::{Channel, InProcess};
use crate::sharing::SchemeId;

use super::{EngineError, PartyContext};

/// Runs `f` at every party of `scheme` with material for `demand` and
/// returns the results in party order. Node 0 of the mesh is left idle.
pub fn run_parties<T, F>(scheme: SchemeId, demand: &Demand, seed: u64, f: F) -> Result<Vec<T>, EngineError>
where
    T: Send,
    F: Fn(&mut PartyContext) -> Result<T, EngineError> + Sync,
{
    let k = scheme.parties();
    let batches = Dealer::new(scheme, seed)?.batch(demand)?;
    let mut mesh = InProcess::mesh(k + 1).into_iter();
    mesh.next();
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = mesh
            .zip(batches)
            .map(|(t, batch)| {
                s.spawn(move || {
                    let mut store = MaterialStore::new();
                    store.push(batch);
                    let mut ctx = PartyContext::new(scheme, Channel::new(Box::new(t), k), store)?;
                    f(&mut ctx)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("party thread panicked"))
            .collect()
    })
}
