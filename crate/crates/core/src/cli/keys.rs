use std::fs;
use std::path::{Path, PathBuf};

use ed25519_dalek::SigningKey;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::group::Group;
use crate::hashing::{derive_seed, sha256};
use crate::ledger::{LedgerGroup, TransparentWallet};
use crate::stealth::{stealth_keygen, StealthRecipientKeys};

/// On-disk wallet: Ed25519 seeds plus the stealth scan and spend secrets, all hex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalletFile {
    pub name: String,
    pub ed25519_seeds: Vec<String>,
    pub scan_secret: String,
    pub spend_secret: String,
}

pub struct Wallet {
    pub name: String,
    pub transparent: TransparentWallet,
    pub stealth: StealthRecipientKeys<LedgerGroup>,
}

impl Wallet {
    pub fn from_seed(name: &str, seed: &[u8], count: usize) -> Self {
        let group = LedgerGroup::default();
        Self {
            name: name.to_string(),
            transparent: TransparentWallet::from_seed(&derive_seed(seed, b"wallet/ed25519"), count),
            stealth: stealth_keygen(&group, &derive_seed(seed, b"wallet/stealth")),
        }
    }

    pub fn to_file(&self) -> WalletFile {
        let group = LedgerGroup::default();
        WalletFile {
            name: self.name.clone(),
            ed25519_seeds: self.transparent.keys().iter().map(|k| hex::encode(k.to_bytes())).collect(),
            scan_secret: hex::encode(group.encode_scalar(self.stealth.scan_secret())),
            spend_secret: hex::encode(group.encode_scalar(self.stealth.spend_secret())),
        }
    }

    pub fn from_file(file: WalletFile) -> Result<Self, CliError> {
        let group = LedgerGroup::default();
        let bad = |what: &str| CliError::Invalid(format!("wallet {}: bad {what}", file.name));
        let keys = file
            .ed25519_seeds
            .iter()
            .map(|s| decode_seed(s).map(|b| SigningKey::from_bytes(&b)).ok_or_else(|| bad("ed25519 seed")))
            .collect::<Result<Vec<_>, _>>()?;
        if keys.is_empty() {
            return Err(bad("key list"));
        }
        let scalar = |s: &str, what| {
            hex::decode(s).ok().and_then(|b| group.decode_scalar(&b)).ok_or_else(|| bad(what))
        };
        let scan = scalar(&file.scan_secret, "scan secret")?;
        let spend = scalar(&file.spend_secret, "spend secret")?;
        Ok(Self {
            transparent: TransparentWallet::new(keys),
            stealth: StealthRecipientKeys::from_secrets(&group, scan, spend),
            name: file.name,
        })
    }
}

fn decode_seed(text: &str) -> Option<[u8; 32]> {
    hex::decode(text.trim()).ok()?.try_into().ok()
}

/// Key material under the `--keys` directory.
pub struct KeyStore {
    root: PathBuf,
}

impl KeyStore {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    fn wallet_path(&self, name: &str) -> PathBuf {
        let file: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' }).collect();
        self.root.join("wallets").join(format!("{file}.json"))
    }

    pub fn has_wallet(&self, name: &str) -> bool {
        self.wallet_path(name).exists()
    }

    pub fn save_wallet(&self, wallet: &Wallet) -> Result<PathBuf, CliError> {
        let path = self.wallet_path(&wallet.name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, serde_json::to_string_pretty(&wallet.to_file())? + "\n")?;
        Ok(path)
    }

    pub fn load_wallet(&self, name: &str) -> Result<Wallet, CliError> {
        let path = self.wallet_path(name);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Invalid(format!("cannot read wallet {name} at {}: {e}", path.display())))?;
        Wallet::from_file(serde_json::from_str(&text)?)
    }

    pub fn save_signing_key(&self, file: &str, key: &SigningKey) -> Result<(), CliError> {
        fs::create_dir_all(&self.root)?;
        fs::write(self.root.join(file), hex::encode(key.to_bytes()) + "\n")?;
        Ok(())
    }

    /// Reads `file`, creating a fresh random key there if it is missing.
    pub fn signing_key(&self, file: &str) -> Result<SigningKey, CliError> {
        let path = self.root.join(file);
        match fs::read_to_string(&path) {
            Ok(text) => decode_seed(&text)
                .map(|b| SigningKey::from_bytes(&b))
                .ok_or_else(|| CliError::Invalid(format!("{} does not hold a hex key", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                let key = SigningKey::from_bytes(&random_seed());
                self.save_signing_key(file, &key)?;
                Ok(key)
            }
            Err(e) => Err(e.into()),
        }
    }
}

pub fn random_seed() -> [u8; 32] {
    let mut seed = [0u8; 32];
    rand::rngs::OsRng.fill_bytes(&mut seed);
    seed
}

pub fn text_seed(text: &str) -> [u8; 32] {
    sha256(text.as_bytes())
}
