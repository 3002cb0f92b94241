namespace spectral {
}  // namespace spectral
