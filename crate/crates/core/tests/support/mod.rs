pub mod bessel_series;
