//! Hand-off between a frame source and the engine loop.

use std::sync::Mutex;

use tactile_core::ingestion::DropOldestQueue;
use tactile_core::Frame;
use tokio::sync::Notify;

/// A parsed frame plus the number of its detections dropped for unknown
/// classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub frame: Frame,
    pub unknown_dropped: u64,
}

struct Inner {
    items: DropOldestQueue<Ingested>,
    closed: bool,
}

/// Bounded single-producer, single-consumer queue. Live sources push with
/// [`FrameQueue::push_latest`] and lose the oldest frames under load; replay
/// uses [`FrameQueue::push_wait`] so no recorded frame is ever skipped.
pub struct FrameQueue {
    inner: Mutex<Inner>,
    readable: Notify,
    writable: Notify,
}

impl FrameQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(Inner {
                items: DropOldestQueue::new(capacity),
                closed: false,
            }),
            readable: Notify::new(),
            writable: Notify::new(),
        }
    }

    pub fn push_latest(&self, item: Ingested) {
        self.inner.lock().unwrap().items.push(item);
        self.readable.notify_one();
    }

    pub async fn push_wait(&self, item: Ingested) {
        loop {
            {
                let mut inner = self.inner.lock().unwrap();
                if !inner.items.is_full() {
                    inner.items.push(item);
                    break;
                }
            }
            self.writable.notified().await;
        }
        self.readable.notify_one();
    }

    /// No more frames will be pushed.
    pub fn close(&self) {
        self.inner.lock().unwrap().closed = true;
        self.readable.notify_one();
    }

    /// Next frame, or `None` once the queue is closed and drained.
    pub async fn pop(&self) -> Option<Ingested> {
        loop {
            {
                let mut inner = self.inner.lock().unwrap();
                if let Some(item) = inner.items.pop() {
                    drop(inner);
                    self.writable.notify_one();
                    return Some(item);
                }
                if inner.closed {
                    return None;
                }
            }
            self.readable.notified().await;
        }
    }

    pub fn dropped(&self) -> u64 {
        self.inner.lock().unwrap().items.dropped()
    }
}
