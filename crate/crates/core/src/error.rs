use thiserror::Error;

use crate::hilbert::{DriveChannel, Scheme};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("drive channel {channel} is not admitted by scheme {scheme}")]
    ChannelNotAdmitted { channel: DriveChannel, scheme: Scheme },

    #[error("scheme {scheme} requires channel {channel}, which is missing")]
    ChannelMissing { channel: DriveChannel, scheme: Scheme },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
