//! Snapshot publication for values that are read concurrently with updates.

use std::sync::{Arc, Mutex, RwLock};

/// Holds the current version of a value behind an `Arc`.
///
/// Readers take a cheap snapshot with [`Published::load`] and keep it as long
/// as they like; writers build the next version off to the side and swap it in
/// with a single pointer store, so a reader sees either the old or the new
/// value in full. Writers are serialized among themselves.
#[derive(Debug)]
pub struct Published<T> {
    current: RwLock<Arc<T>>,
    writer: Mutex<()>,
}

impl<T> Published<T> {
    pub fn new(value: T) -> Self {
        Self {
            current: RwLock::new(Arc::new(value)),
            writer: Mutex::new(()),
        }
    }

    pub fn load(&self) -> Arc<T> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn store(&self, value: T) {
        let _w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(value);
    }

    /// Computes the next version from the current one and publishes it.
    /// Returns whatever `f` returns alongside the new value.
    pub fn update<R>(&self, f: impl FnOnce(&T) -> (T, R)) -> R {
        let _w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let cur = self.load();
        let (next, r) = f(&cur);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        r
    }
}

impl<T: Default> Default for Published<T> {
    fn default() -> Self {
        Self::new(T::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn readers_never_see_torn_values() {
        // Each version is a vector whose entries all equal the version number.
        let cell = Arc::new(Published::new(vec![0u64; 256]));
        let writer = {
            let cell = Arc::clone(&cell);
            thread::spawn(move || {
                for v in 1..=500u64 {
                    cell.store(vec![v; 256]);
                }
            })
        };
        let readers: Vec<_> = (0..4)
            .map(|_| {
                let cell = Arc::clone(&cell);
                thread::spawn(move || {
                    let mut last = 0;
                    for _ in 0..2000 {
                        let snap = cell.load();
                        let first = snap[0];
                        assert!(snap.iter().all(|&x| x == first));
                        assert!(first >= last);
                        last = first;
                    }
                })
            })
            .collect();
        writer.join().unwrap();
        for r in readers {
            r.join().unwrap();
        }
        assert_eq!(cell.load()[0], 500);
    }

    #[test]
    fn update_returns_value() {
        let cell = Published::new(1);
        let old = cell.update(|v| (v + 1, *v));
        assert_eq!(old, 1);
        assert_eq!(*cell.load(), 2);
    }
}
