pub mod game;
pub mod jm;
pub mod scan;
pub mod verify;
