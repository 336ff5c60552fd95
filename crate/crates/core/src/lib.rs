pub mod critical;
pub mod evolve;
pub mod cli;
pub mod fit;
pub mod io;
pub mod modulation;
pub mod odeint;
pub mod selfsim;
pub mod spectrum;
pub mod stencil;
