pub mod cli;
pub mod io;
pub mod plot;
pub mod rundir;
