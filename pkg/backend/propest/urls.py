"""
URL configuration for the propest project.
"""
from django.urls import path, include
from rest_framework.decorators import api_view
from rest_framework.response import Response
from rest_framework.reverse import reverse


@api_view(['GET'])
def api_root(request, format=None):
    """API root endpoint"""
    return Response({
        'populations': reverse('population-list', request=request, format=format),
        'weights': reverse('weights-solve', request=request, format=format),
        'estimates': reverse('estimates-evaluate', request=request, format=format),
        'simulations': reverse('simulation-list', request=request, format=format),
    })


urlpatterns = [
    path('api/', api_root, name='api-root'),
    path('api/', include('backend.apps.estimation.urls')),
]
