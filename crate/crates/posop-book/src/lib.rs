// Book doctest shim; chapters are included in build later.
