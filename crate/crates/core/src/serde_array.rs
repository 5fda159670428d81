//! Serde glue for `[T; D]` with a const-generic length, encoded as a sequence.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S, T, const D: usize>(values: &[T; D], serializer: S) -> Result<S::Ok, S::Error>
where
    S: Serializer,
    T: Serialize,
{
    values.as_slice().serialize(serializer)
}

pub fn deserialize<'de, De, T, const D: usize>(deserializer: De) -> Result<[T; D], De::Error>
where
    De: Deserializer<'de>,
    T: Deserialize<'de>,
{
    let values = Vec::<T>::deserialize(deserializer)?;
    let len = values.len();
    values.try_into().map_err(|_| De::Error::invalid_length(len, &format!("an array of length {D}").as_str()))
}
