//! Async front end for the kernel.
//!
//! Protocols are written as ordinary per-device `async` code that awaits
//! `ctx.transmit(slot, msg)` / `ctx.listen(slot)`. The kernel polls each
//! device future once per requested slot with a no-op waker, so nothing here
//! depends on an async runtime.

use std::cell::{RefCell, RefMut};
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use bytes::Bytes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kernel::{run, Behavior, Run, RunConfig, RunError, Slot, Step};
use crate::model::{Action, ModelKind, Signal};

pub type LocalBoxFuture<'a, T> = Pin<Box<dyn Future<Output = T> + 'a>>;

#[derive(Default)]
struct Port {
    req: RefCell<Option<(Slot, Action)>>,
    resp: RefCell<Option<Signal>>,
}

struct RngCell {
    seed: u64,
    stream: u64,
    rng: RefCell<Option<ChaCha8Rng>>,
    model: ModelKind,
}

/// Handle a device program uses to reach the channel.
#[derive(Clone)]
pub struct Ctx {
    port: Rc<Port>,
    rng: Rc<RngCell>,
    index: u32,
}

impl Ctx {
    fn root(index: u32, seed: u64, model: ModelKind) -> Ctx {
        Ctx {
            port: Rc::new(Port::default()),
            rng: Rc::new(RngCell {
                seed,
                stream: index as u64,
                rng: RefCell::new(None),
                model,
            }),
            index,
        }
    }

    /// Kernel index of the device (not a protocol-level ID).
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn model(&self) -> ModelKind {
        self.rng.model
    }

    /// The device's private random stream, created on first use.
    pub fn rng(&self) -> RefMut<'_, ChaCha8Rng> {
        RefMut::map(self.rng.rng.borrow_mut(), |slot| {
            slot.get_or_insert_with(|| {
                let mut r = ChaCha8Rng::seed_from_u64(self.rng.seed);
                r.set_stream(self.rng.stream);
                r
            })
        })
    }

    pub fn transmit(&self, slot: Slot, msg: Bytes) -> Act<'_> {
        self.act(slot, Action::Transmit(msg))
    }

    pub fn listen(&self, slot: Slot) -> Act<'_> {
        self.act(slot, Action::Listen)
    }

    /// Wake at `slot` without touching the channel.
    pub fn idle(&self, slot: Slot) -> Act<'_> {
        self.act(slot, Action::Idle)
    }

    pub fn act(&self, slot: Slot, action: Action) -> Act<'_> {
        Act {
            port: &self.port,
            req: Some((slot, action)),
        }
    }

    /// Fresh handles for `k` roles played by this device; drive them with [`Ctx::join`].
    pub fn split(&self, k: usize) -> Vec<Ctx> {
        (0..k)
            .map(|_| Ctx {
                port: Rc::new(Port::default()),
                rng: self.rng.clone(),
                index: self.index,
            })
            .collect()
    }

    /// Run several roles on this one radio.
    ///
    /// Each slot the device transmits if some role transmits, else listens if some
    /// role listens. A listening role in a slot where the device itself transmits
    /// gets the device's own message; callers only do this in slots with a single
    /// scheduled transmitter. Two roles transmitting in the same slot is a bug.
    pub fn join<'a, T: 'a>(
        &'a self,
        roles: &'a [Ctx],
        futs: Vec<LocalBoxFuture<'a, T>>,
    ) -> Join<'a, T> {
        assert_eq!(roles.len(), futs.len());
        let n = futs.len();
        Join {
            dev: self,
            roles,
            futs: futs.into_iter().map(Some).collect(),
            outs: (0..n).map(|_| None).collect(),
            inflight: None,
            outer: None,
        }
    }
}

/// One channel access; resolves to the signal of that slot.
pub struct Act<'a> {
    port: &'a Port,
    req: Option<(Slot, Action)>,
}

impl Future for Act<'_> {
    type Output = Signal;

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Signal> {
        if let Some(r) = self.req.take() {
            *self.port.req.borrow_mut() = Some(r);
            return Poll::Pending;
        }
        match self.port.resp.borrow_mut().take() {
            Some(sig) => Poll::Ready(sig),
            None => Poll::Pending,
        }
    }
}

pub struct Join<'a, T> {
    dev: &'a Ctx,
    roles: &'a [Ctx],
    futs: Vec<Option<LocalBoxFuture<'a, T>>>,
    outs: Vec<Option<T>>,
    inflight: Option<(Slot, Option<Bytes>)>,
    outer: Option<Act<'a>>,
}

// Nothing inside is structurally pinned: role futures are boxed.
impl<T> Unpin for Join<'_, T> {}

impl<T> Future for Join<'_, T> {
    type Output = Vec<T>;

    fn poll(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<Vec<T>> {
        let this = &mut *self;
        if let Some((slot, own)) = this.inflight.take() {
            let sig = match this.outer.as_mut().map(|a| Pin::new(a).poll(cx)) {
                Some(Poll::Ready(s)) => s,
                _ => {
                    this.inflight = Some((slot, own));
                    return Poll::Pending;
                }
            };
            this.outer = None;
            for r in this.roles {
                let mut req = r.port.req.borrow_mut();
                if !matches!(&*req, Some((s, _)) if *s == slot) {
                    continue;
                }
                let (_, a) = req.take().unwrap();
                let rsig = match a {
                    Action::Transmit(_) => sig.clone(),
                    Action::Listen => match &own {
                        Some(m) => Signal::Message(m.clone()),
                        None => sig.clone(),
                    },
                    Action::Idle => Signal::None,
                };
                *r.port.resp.borrow_mut() = Some(rsig);
            }
        }
        for i in 0..this.futs.len() {
            if this.roles[i].port.req.borrow().is_some() {
                continue;
            }
            if let Some(f) = this.futs[i].as_mut() {
                if let Poll::Ready(o) = f.as_mut().poll(cx) {
                    this.outs[i] = Some(o);
                    this.futs[i] = None;
                } else {
                    assert!(
                        this.roles[i].port.req.borrow().is_some(),
                        "role future pending without a channel request"
                    );
                }
            }
        }
        let mut next: Option<Slot> = None;
        for (i, r) in this.roles.iter().enumerate() {
            if this.futs[i].is_some() {
                if let Some((s, _)) = &*r.port.req.borrow() {
                    next = Some(next.map_or(*s, |n: Slot| n.min(*s)));
                }
            }
        }
        let Some(slot) = next else {
            return Poll::Ready(
                this.outs
                    .iter_mut()
                    .map(|o| o.take().expect("role finished"))
                    .collect(),
            );
        };
        let mut own: Option<Bytes> = None;
        let mut listen = false;
        for r in this.roles {
            if let Some((s, a)) = &*r.port.req.borrow() {
                if *s != slot {
                    continue;
                }
                match a {
                    Action::Transmit(m) => {
                        assert!(
                            own.is_none(),
                            "two roles of one device transmit in slot {slot}"
                        );
                        own = Some(m.clone());
                    }
                    Action::Listen => listen = true,
                    Action::Idle => {}
                }
            }
        }
        let action = match &own {
            Some(m) => Action::Transmit(m.clone()),
            None if listen => Action::Listen,
            None => Action::Idle,
        };
        let mut act = this.dev.act(slot, action);
        let _ = Pin::new(&mut act).poll(cx);
        this.outer = Some(act);
        this.inflight = Some((slot, own));
        return Poll::Pending;
    }
}

/// Kernel behavior wrapping one device future.
pub struct AsyncDevice<O> {
    fut: LocalBoxFuture<'static, O>,
    port: Rc<Port>,
}

impl<O> Behavior for AsyncDevice<O> {
    type Output = O;

    fn step(&mut self, signal: Option<Signal>) -> Step<O> {
        if let Some(s) = signal {
            *self.port.resp.borrow_mut() = Some(s);
        }
        let mut cx = Context::from_waker(Waker::noop());
        match self.fut.as_mut().poll(&mut cx) {
            Poll::Ready(o) => Step::Done(o),
            Poll::Pending => {
                let (slot, action) = self
                    .port
                    .req
                    .borrow_mut()
                    .take()
                    .expect("device future pending without a channel request");
                Step::Act { slot, action }
            }
        }
    }
}

/// Run `n` devices, each built by `make` from its own [`Ctx`].
pub fn run_async<O, F, Fut>(
    n: usize,
    model: ModelKind,
    cfg: &RunConfig,
    mut make: F,
) -> Result<Run<O>, RunError<O>>
where
    F: FnMut(Ctx) -> Fut,
    Fut: Future<Output = O> + 'static,
{
    let devices: Vec<AsyncDevice<O>> = (0..n)
        .map(|i| {
            let ctx = Ctx::root(i as u32, cfg.seed, model);
            let port = ctx.port.clone();
            AsyncDevice {
                fut: Box::pin(make(ctx)),
                port,
            }
        })
        .collect();
    run(devices, model, cfg)
}
