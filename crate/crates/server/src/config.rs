use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;

use maplot_core::ingest::{IngestOptions, DEFAULT_MAX_ROWS};
use maplot_core::ma::DEFAULT_SHADE_DEPTH;

/// Largest number of points returned in one page.
pub const DEFAULT_PAGE_SIZE: usize = 50_000;

#[derive(Debug, Clone, Parser)]
#[command(name = "maplot-server", about = "Serve the interactive MA plot engine over HTTP")]
pub struct Config {
    /// Address to listen on.
    #[arg(long, env = "MAPLOT_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,

    /// Maximum number of genes accepted in one upload.
    #[arg(long, env = "MAPLOT_MAX_ROWS", default_value_t = DEFAULT_MAX_ROWS)]
    pub max_rows: usize,

    /// Pseudocount added to raw intensities before taking logs (0 disables).
    #[arg(long, env = "MAPLOT_PSEUDOCOUNT", default_value_t = 0.0)]
    pub pseudocount: f64,

    /// Decades of p-value below alpha spanned by the colour ramp.
    #[arg(long, env = "MAPLOT_SHADE_DEPTH", default_value_t = DEFAULT_SHADE_DEPTH)]
    pub shade_depth: f64,

    /// Directory for write-through session bundles; sessions found there are
    /// restored at startup.
    #[arg(long, env = "MAPLOT_PERSIST_DIR")]
    pub persist_dir: Option<PathBuf>,

    /// Request body limit in bytes.
    #[arg(long, env = "MAPLOT_MAX_UPLOAD_BYTES", default_value_t = 256 * 1024 * 1024)]
    pub max_upload_bytes: usize,

    /// Points per page in point listings.
    #[arg(long, env = "MAPLOT_PAGE_SIZE", default_value_t = DEFAULT_PAGE_SIZE)]
    pub page_size: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_rows: DEFAULT_MAX_ROWS,
            pseudocount: 0.0,
            shade_depth: DEFAULT_SHADE_DEPTH,
            persist_dir: None,
            max_upload_bytes: 256 * 1024 * 1024,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

impl Config {
    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            pseudocount: self.pseudocount,
            max_rows: self.max_rows,
        }
    }
}
