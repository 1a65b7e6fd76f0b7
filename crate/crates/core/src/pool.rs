//! Pools of generator/validator handle pairs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use crate::catalog::ClassCatalog;
use crate::protocol::{
    spawn_worker_with, EndpointSpec, FramingPolicy, ImageFormat, ProtocolError, Role, WorkerHandle,
};

/// One generator and one validator, used together by a single task.
#[derive(Debug)]
pub struct WorkerPair {
    pub generator: WorkerHandle,
    pub validator: WorkerHandle,
}

impl WorkerPair {
    pub fn new(generator: WorkerHandle, validator: WorkerHandle) -> Result<Self, ProtocolError> {
        if generator.role() != Role::Generator {
            return Err(ProtocolError::WrongRole {
                expected: Role::Generator,
                actual: generator.role(),
            });
        }
        if validator.role() != Role::Validator {
            return Err(ProtocolError::WrongRole {
                expected: Role::Validator,
                actual: validator.role(),
            });
        }
        Ok(Self {
            generator,
            validator,
        })
    }

    pub fn shutdown(&mut self) {
        self.generator.shutdown();
        self.validator.shutdown();
    }
}

/// Spawns `size` independent pairs from the two endpoint specs.
pub fn spawn_pairs(
    generator: &EndpointSpec,
    validator: &EndpointSpec,
    catalog: &ClassCatalog,
    format: &ImageFormat,
    size: usize,
) -> Result<Vec<WorkerPair>, ProtocolError> {
    let catalog = Arc::new(catalog.clone());
    (0..size.max(1))
        .map(|_| {
            let g = spawn_worker_with(
                generator,
                Arc::clone(&catalog),
                format.clone(),
                FramingPolicy::Strict,
            )?;
            let v = spawn_worker_with(
                validator,
                Arc::clone(&catalog),
                format.clone(),
                FramingPolicy::Strict,
            )?;
            WorkerPair::new(g, v)
        })
        .collect()
}

/// Applies `work` to every item using one thread per pair. Output order
/// always matches `items`, whatever order the work completes in.
pub fn run_pooled<T, R, F>(pool: &mut [WorkerPair], items: &[T], work: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&mut WorkerPair, &T) -> R + Sync,
{
    assert!(!pool.is_empty(), "worker pool is empty");
    if pool.len() == 1 {
        let pair = &mut pool[0];
        return items.iter().map(|item| work(pair, item)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for pair in pool.iter_mut() {
            let (next, slots, work) = (&next, &slots, &work);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = work(pair, &items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("slot lock")
                .expect("every item processed")
        })
        .collect()
}
