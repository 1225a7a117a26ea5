//! Denoisers behind one trait, created by name from spec strings such as
//! `hp:cutoff=40,order=4` or `msemg:checkpoint=model.msmg`.

mod builtin;
mod spec;

pub use builtin::{Highpass, Identity, MsemgDenoiser, TemplateSubtraction};
pub use spec::{parse_spec, SpecOptions};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::signal::Signal;

pub trait Denoiser: Send + Sync {
    /// Label used in reports; includes any non-default settings.
    fn name(&self) -> &str;

    /// Output has the input's rate and length.
    fn denoise(&self, x: &Signal) -> Result<Signal>;
}

type Factory = Box<dyn Fn(SpecOptions) -> Result<Box<dyn Denoiser>> + Send + Sync>;

struct Entry {
    summary: &'static str,
    factory: Factory,
}

pub struct DenoiserRegistry {
    entries: BTreeMap<String, Entry>,
}

impl DenoiserRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// `identity`, `hp`, `ts` and `msemg`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("identity", "returns the input unchanged", |o| {
            o.finish()?;
            Ok(Box::new(Identity))
        });
        r.register("hp", "zero-phase Butterworth highpass [cutoff=40, order=4]", |mut o| {
            let d = Highpass::new(o.f64("cutoff", crate::dsp::HP_CUTOFF_HZ)?, o.usize("order", crate::dsp::HP_ORDER)?)?;
            o.finish()?;
            Ok(Box::new(d))
        });
        r.register("ts", "R-peak template subtraction [window=600 ms]", |mut o| {
            let d = TemplateSubtraction::new(o.f64("window", crate::dsp::DEFAULT_WINDOW_MS)?)?;
            o.finish()?;
            Ok(Box::new(d))
        });
        r.register("msemg", "trained network [checkpoint=PATH]", |mut o| {
            let path = o.required("checkpoint")?;
            o.finish()?;
            Ok(Box::new(MsemgDenoiser::load(std::path::Path::new(&path))?))
        });
        r
    }

    /// Later registrations under the same name replace earlier ones.
    pub fn register(
        &mut self,
        name: &str,
        summary: &'static str,
        factory: impl Fn(SpecOptions) -> Result<Box<dyn Denoiser>> + Send + Sync + 'static,
    ) {
        self.entries.insert(
            name.to_string(),
            Entry {
                summary,
                factory: Box::new(factory),
            },
        );
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn describe(&self) -> Vec<(&str, &'static str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.summary)).collect()
    }

    pub fn create(&self, spec: &str) -> Result<Box<dyn Denoiser>> {
        let (name, opts) = parse_spec(spec)?;
        let entry = self.entries.get(&name).ok_or_else(|| {
            Error::invalid(format!(
                "unknown denoiser `{name}` (available: {})",
                self.names().join(", ")
            ))
        })?;
        (entry.factory)(opts)
    }
}

impl Default for DenoiserRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Negate;

    impl Denoiser for Negate {
        fn name(&self) -> &str {
            "negate"
        }

        fn denoise(&self, x: &Signal) -> Result<Signal> {
            x.with_samples(x.samples().iter().map(|v| -v).collect())
        }
    }

    #[test]
    fn builtins_resolve() {
        let r = DenoiserRegistry::with_builtins();
        assert_eq!(r.names(), vec!["hp", "identity", "msemg", "ts"]);
        assert_eq!(r.create("hp").unwrap().name(), "hp:cutoff=40,order=4");
        assert_eq!(r.create("hp:cutoff=30").unwrap().name(), "hp:cutoff=30,order=4");
        assert!(r.create("hp:cutof=30").is_err());
        assert!(r.create("nope").is_err());
        assert!(r.create("msemg").is_err());
        assert!(r.create("identity:x=1").is_err());
    }

    #[test]
    fn custom_registration() {
        let mut r = DenoiserRegistry::empty();
        r.register("negate", "flips sign", |o| {
            o.finish()?;
            Ok(Box::new(Negate))
        });
        let x = Signal::from_samples(vec![1.0, -2.0], 10).unwrap();
        let y = r.create("negate").unwrap().denoise(&x).unwrap();
        assert_eq!(y.samples(), &[-1.0, 2.0]);
    }
}
