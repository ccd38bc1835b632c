//! RC4 stream cipher: key scheduling (KSA) and keystream generation (PRGA).
//!
//! Encryption and decryption are the same operation — XOR the data with
//! the keystream — so a receiver holding the same key simply applies the
//! keystream again.
//!
//! RC4 is cryptographically broken (biased early keystream bytes, related
//! key weaknesses) and is implemented here because it is what the modeled
//! hardware runs, not because it should protect anything. Use it for
//! compatibility and study only.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeyError {
    #[error("key must be 1 to 256 bytes, got {actual}")]
    Length { actual: usize },
}

/// A raw RC4 key, 1 to 256 bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct Key(Vec<u8>);

impl Key {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, KeyError> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > 256 {
            return Err(KeyError::Length {
                actual: bytes.len(),
            });
        }
        Ok(Self(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Key {
    // never echo key material
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key({} bytes)", self.0.len())
    }
}

/// Cipher state: the 256-byte permutation plus the two PRGA indices.
///
/// Constructing a state runs the KSA; every call that produces keystream
/// advances the state, so the stream position is part of the value.
#[derive(Clone)]
pub struct Rc4State {
    s: [u8; 256],
    i: u8,
    j: u8,
}

impl fmt::Debug for Rc4State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rc4State {{ i: {}, j: {} }}", self.i, self.j)
    }
}

impl Rc4State {
    /// Key-scheduling algorithm: start from the identity permutation and
    /// swap through it once, driven by the key bytes.
    pub fn new(key: &Key) -> Self {
        let mut s = [0u8; 256];
        for (i, v) in s.iter_mut().enumerate() {
            *v = i as u8;
        }
        let key = key.bytes();
        let mut j = 0u8;
        for i in 0..256 {
            j = j.wrapping_add(s[i]).wrapping_add(key[i % key.len()]);
            s.swap(i, j as usize);
        }
        Self { s, i: 0, j: 0 }
    }

    /// One PRGA step.
    fn next_byte(&mut self) -> u8 {
        self.i = self.i.wrapping_add(1);
        self.j = self.j.wrapping_add(self.s[self.i as usize]);
        self.s.swap(self.i as usize, self.j as usize);
        let t = self.s[self.i as usize].wrapping_add(self.s[self.j as usize]);
        self.s[t as usize]
    }

    /// The next `n` keystream bytes, advancing the stream position.
    pub fn keystream(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.next_byte()).collect()
    }

    /// XORs `data` with the keystream, returning the result. Applied to
    /// ciphertext with an identically keyed fresh state, this decrypts.
    pub fn apply_keystream(&mut self, data: &[u8]) -> Vec<u8> {
        data.iter().map(|&b| b ^ self.next_byte()).collect()
    }

    /// In-place [`Rc4State::apply_keystream`].
    pub fn apply_in_place(&mut self, data: &mut [u8]) {
        for b in data {
            *b ^= self.next_byte();
        }
    }

    #[cfg(test)]
    fn permutation(&self) -> &[u8; 256] {
        &self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(bytes: &[u8]) -> Key {
        Key::new(bytes.to_vec()).unwrap()
    }

    fn is_permutation(s: &[u8; 256]) -> bool {
        let mut seen = [false; 256];
        for &v in s {
            if seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
        }
        true
    }

    #[test]
    fn key_length_bounds() {
        assert_eq!(Key::new(vec![]).unwrap_err(), KeyError::Length { actual: 0 });
        assert_eq!(
            Key::new(vec![0u8; 257]).unwrap_err(),
            KeyError::Length { actual: 257 }
        );
        assert!(Key::new(vec![0u8; 256]).is_ok());
        assert!(Key::new(vec![7u8]).is_ok());
    }

    #[test]
    fn ksa_is_deterministic_permutation() {
        let a = Rc4State::new(&key(b"Key"));
        let b = Rc4State::new(&key(b"Key"));
        assert_eq!(a.permutation(), b.permutation());
        assert!(is_permutation(a.permutation()));
    }

    // Published vectors, cross-checked against two independent
    // implementations before being frozen here.
    #[test]
    fn keystream_vector_key() {
        let mut state = Rc4State::new(&key(b"Key"));
        assert_eq!(
            state.keystream(9),
            [0xEB, 0x9F, 0x77, 0x81, 0xB7, 0x34, 0xCA, 0x72, 0xA7]
        );
    }

    #[test]
    fn keystream_vector_wiki() {
        let mut state = Rc4State::new(&key(b"Wiki"));
        assert_eq!(state.keystream(5), [0x60, 0x44, 0xDB, 0x6D, 0x41]);
    }

    #[test]
    fn ciphertext_vectors() {
        let mut state = Rc4State::new(&key(b"Key"));
        assert_eq!(
            state.apply_keystream(b"Plaintext"),
            [0xBB, 0xF3, 0x16, 0xE8, 0xD9, 0x40, 0xAF, 0x0A, 0xD3]
        );

        let mut state = Rc4State::new(&key(b"Wiki"));
        assert_eq!(
            state.apply_keystream(b"pedia"),
            [0x10, 0x21, 0xBF, 0x04, 0x20]
        );

        let mut state = Rc4State::new(&key(b"Secret"));
        assert_eq!(
            state.apply_keystream(b"Attack at dawn"),
            [0x45, 0xA0, 0x1F, 0x64, 0x5F, 0xC3, 0x5B, 0x38, 0x35, 0x52, 0x54, 0x4B, 0x9B, 0xF5]
        );
    }

    #[test]
    fn zero_length_request_leaves_state_unchanged() {
        let mut state = Rc4State::new(&key(b"Key"));
        let before = (state.i, state.j, *state.permutation());
        assert!(state.keystream(0).is_empty());
        assert_eq!((state.i, state.j, *state.permutation()), before);
        // the stream then continues from the start
        assert_eq!(state.keystream(1), [0xEB]);
    }

    #[test]
    fn stream_is_position_based_not_call_based() {
        let mut split = Rc4State::new(&key(b"Secret"));
        let mut whole = Rc4State::new(&key(b"Secret"));
        let a = split.keystream(1);
        let b = split.keystream(1);
        let ab = whole.keystream(2);
        assert_eq!([a[0], b[0]], ab[..]);
    }

    proptest! {
        #[test]
        fn involution(key_bytes in prop::collection::vec(any::<u8>(), 1..64),
                      payload in prop::collection::vec(any::<u8>(), 0..512)) {
            let k = Key::new(key_bytes).unwrap();
            let mut enc = Rc4State::new(&k);
            let mut dec = Rc4State::new(&k);
            let ct = enc.apply_keystream(&payload);
            let pt = dec.apply_keystream(&ct);
            prop_assert_eq!(pt, payload);
        }

        #[test]
        fn keystream_prefix_property(key_bytes in prop::collection::vec(any::<u8>(), 1..32),
                                     n in 0usize..128,
                                     extra in 1usize..128) {
            let k = Key::new(key_bytes).unwrap();
            let mut short = Rc4State::new(&k);
            let mut long = Rc4State::new(&k);
            let a = short.keystream(n);
            let b = long.keystream(n + extra);
            prop_assert_eq!(&a[..], &b[..n]);
        }

        #[test]
        fn state_stays_a_permutation(key_bytes in prop::collection::vec(any::<u8>(), 1..32),
                                     steps in 0usize..2048) {
            let k = Key::new(key_bytes).unwrap();
            let mut state = Rc4State::new(&k);
            prop_assert!(is_permutation(state.permutation()));
            state.keystream(steps);
            prop_assert!(is_permutation(state.permutation()));
        }
    }
}
