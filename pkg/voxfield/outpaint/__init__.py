"""Distance-guided region extraction and progressive outpainting."""
