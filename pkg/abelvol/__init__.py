"""Fuchsian systems on the four-punctured sphere, their abelianization on the double-cover torus, the 
unitarizing section over the Jacobian and the symplectic volume it integrates to."""
