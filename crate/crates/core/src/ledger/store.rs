use std::fs;
use std::path::Path;

use super::block::Block;
use super::state::ChainState;
use super::tx::TxOutput;
use super::LedgerError;

/// Blocks from genesis together with the state they replay to.
///
/// On disk a chain is one hex-encoded canonical block per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
    state: ChainState,
}

impl Chain {
    pub fn with_genesis(outputs: Vec<TxOutput>) -> Result<Self, LedgerError> {
        Self::from_blocks(vec![Block::genesis(outputs)])
    }

    /// Replays `blocks` from an empty state.
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self, LedgerError> {
        if blocks.is_empty() {
            return Err(LedgerError::EmptyChain);
        }
        let mut state = ChainState::new();
        for block in &blocks {
            state.apply_block(block)?;
        }
        Ok(Self { blocks, state })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn push(&mut self, block: Block) -> Result<(), LedgerError> {
        self.state.apply_block(&block)?;
        self.blocks.push(block);
        Ok(())
    }

    pub fn to_store_string(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            out.push_str(&block.to_hex());
            out.push('\n');
        }
        out
    }

    /// Decodes every line and replays. Blank lines are ignored.
    pub fn from_store_str(text: &str) -> Result<Self, LedgerError> {
        let blocks = text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| Block::from_hex(line).map_err(|source| LedgerError::Decode { line: i + 1, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_blocks(blocks)
    }

    pub fn save(&self, path: &Path) -> Result<(), LedgerError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_store_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        Self::from_store_str(&fs::read_to_string(path)?)
    }
}
