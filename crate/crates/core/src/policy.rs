//! Feed-forward policy approximating the NMPC (stub).
