// SPDX-License-Identifier: MIT OR Apache-2.0

//! Session registry with one lock per session and a `session.json` per id.

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use rand::RngCore;
use vexad_core::session::Session;

pub type Shared = Arc<Mutex<Session>>;

pub struct Store {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Shared>>,
}

/// Ids are 32 lowercase hex digits; anything else never touches the disk.
pub fn valid_id(id: &str) -> bool {
    id.len() == 32
        && id
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

fn new_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(id).join("session.json")
    }

    pub fn persist(&self, id: &str, session: &Session) -> vexad_core::Result<()> {
        let path = self.path_of(id);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        session.save(&path)
    }

    /// Registers a new session under a fresh id and writes it out.
    pub fn insert(&self, session: Session) -> vexad_core::Result<String> {
        let mut map = self.sessions.write().expect("session map poisoned");
        let mut id = new_id();
        while map.contains_key(&id) || self.path_of(&id).exists() {
            id = new_id();
        }
        self.persist(&id, &session)?;
        map.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Looks the session up in memory, then on disk (after a restart).
    pub fn get(&self, id: &str) -> Option<Shared> {
        if !valid_id(id) {
            return None;
        }
        if let Some(s) = self.sessions.read().expect("session map poisoned").get(id) {
            return Some(s.clone());
        }
        let path = self.path_of(id);
        if !path.exists() {
            return None;
        }
        let session = Session::load(&path).ok()?;
        let mut map = self.sessions.write().expect("session map poisoned");
        Some(
            map.entry(id.to_string())
                .or_insert_with(|| Arc::new(Mutex::new(session)))
                .clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_128_bit_hex() {
        let id = new_id();
        assert!(valid_id(&id));
        assert_ne!(id, new_id());
        assert!(!valid_id("../../etc/passwd"));
        assert!(!valid_id(&"A".repeat(32)));
    }
}
