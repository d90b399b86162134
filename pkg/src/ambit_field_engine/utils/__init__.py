from .provenance import (
    canonical_json,
    package_version,
    provenance_line,
    sha256_hex,
    version_string,
    write_csv,
    write_json,
    write_metadata,
)
from .quadrature import circle_angles, gauss_legendre, polar_disk_rule, richardson, unit_directions
from .rng import replicate_stream, stream
